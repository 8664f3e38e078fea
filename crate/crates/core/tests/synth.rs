use memimprint::domain::{Dataset, ParticipantId, Timestamp};
use memimprint::synthdata::{generate, SynthConfig};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut r = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

#[test]
fn event_counts_track_latent_strength() {
    let cfg = SynthConfig {
        egos: 40,
        ..SynthConfig::default()
    };
    let (d, truth) = generate(&cfg).unwrap();
    // count each tie's events inside the semester its strength applies to
    let mut counts: BTreeMap<(ParticipantId, ParticipantId, u32), f64> =
        truth.keys().map(|k| (*k, 0.0)).collect();
    let wave = |k: u32| cfg.wave_time(k);
    for e in d.events() {
        let sem = (1..=cfg.semesters).find(|&k| e.timestamp < wave(k));
        let Some(sem) = sem else { continue };
        for (ego, alter) in [(e.sender, e.receiver), (e.receiver, e.sender)] {
            if let Some(c) = counts.get_mut(&(ego, alter, sem)) {
                *c += 1.0;
            }
        }
    }
    let (x, y): (Vec<f64>, Vec<f64>) = truth.iter().map(|(k, s)| (*s, counts[k])).unzip();
    let rho = pearson(&ranks(&x), &ranks(&y));
    assert!(rho >= 0.8, "Spearman rho {rho}");
}

/// Events per ego per hour over the study span.
fn ego_rates(d: &Dataset, cfg: &SynthConfig) -> Vec<f64> {
    let span = cfg.wave_time(cfg.semesters).hours_since(Timestamp(cfg.start));
    let egos = d.egos();
    let mut n: BTreeMap<ParticipantId, f64> = egos.iter().map(|e| (*e, 0.0)).collect();
    for e in d.events() {
        for p in [e.sender, e.receiver] {
            if let Some(c) = n.get_mut(&p) {
                *c += 1.0;
            }
        }
    }
    n.values().map(|c| c / span).collect()
}

/// Two-sample Kolmogorov-Smirnov statistic.
fn ks(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn twins_have_matching_rate_distributions() {
    let a_cfg = SynthConfig {
        egos: 120,
        seed: 1,
        ..SynthConfig::default()
    };
    let b_cfg = SynthConfig {
        seed: 2,
        id_base: 5_000_000,
        ..a_cfg.clone()
    };
    let (a, _) = generate(&a_cfg).unwrap();
    let (b, _) = generate(&b_cfg).unwrap();
    let (ra, rb) = (ego_rates(&a, &a_cfg), ego_rates(&b, &b_cfg));
    let (n, m) = (ra.len() as f64, rb.len() as f64);
    let critical = 1.628 * ((n + m) / (n * m)).sqrt();
    let stat = ks(ra, rb);
    assert!(stat < critical, "KS {stat} >= {critical}");
}

#[test]
fn ingest_order_does_not_matter() {
    let (d, _) = generate(&SynthConfig {
        egos: 5,
        ..SynthConfig::default()
    })
    .unwrap();
    let mut events = d.events().to_vec();
    let mut surveys = d.surveys().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    events.shuffle(&mut rng);
    surveys.shuffle(&mut rng);
    let again = Dataset::new(d.name.clone(), events, surveys, d.schema().clone()).unwrap();
    assert_eq!(again.events(), d.events());
    assert_eq!(again.surveys(), d.surveys());
    let twice = Dataset::new(
        "x",
        again.events().to_vec(),
        again.surveys().to_vec(),
        again.schema().clone(),
    )
    .unwrap();
    assert_eq!(twice.events(), d.events());
}
