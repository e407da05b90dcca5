use num_traits::{Float, ToPrimitive};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{GridSeq, NoteLevelEvent, NoteLevelSeq};

/// Timing noise, each term scaled by the note's duration before adding:
/// `onset += d·N(onset_mu, onset_sigma)`, `duration += d·N(dur_mu, dur_sigma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbParams {
    pub onset_mu: f64,
    pub onset_sigma: f64,
    pub dur_mu: f64,
    pub dur_sigma: f64,
    pub seed: u64,
}

impl Default for PerturbParams {
    fn default() -> PerturbParams {
        PerturbParams { onset_mu: 0.0, onset_sigma: 0.08, dur_mu: 0.8, dur_sigma: 0.24, seed: 0 }
    }
}

impl PerturbParams {
    pub fn with_seed(self, seed: u64) -> PerturbParams {
        PerturbParams { seed, ..self }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PerturbError {
    #[error("{name} = {value} must be finite and non-negative")]
    Sigma { name: &'static str, value: f64 },
    #[error("{name} = {value} must be finite")]
    Mean { name: &'static str, value: f64 },
}

fn normal<F>(mu: f64, sigma: f64, names: (&'static str, &'static str)) -> Result<Normal<F>, PerturbError>
where
    F: Float,
    StandardNormal: Distribution<F>,
{
    if !mu.is_finite() {
        return Err(PerturbError::Mean { name: names.0, value: mu });
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(PerturbError::Sigma { name: names.1, value: sigma });
    }
    let cast = |x: f64| F::from(x).expect("finite f64 converts to float");
    Ok(Normal::new(cast(mu), cast(sigma)).expect("validated parameters"))
}

/// Add duration-scaled Gaussian noise to onsets and durations. Event order
/// is kept; one onset draw then one duration draw per event.
pub fn perturb<F>(seq: &GridSeq, params: &PerturbParams) -> Result<NoteLevelSeq<F>, PerturbError>
where
    F: Float,
    StandardNormal: Distribution<F>,
{
    let onset = normal::<F>(params.onset_mu, params.onset_sigma, ("onset_mu", "onset_sigma"))?;
    let dur = normal::<F>(params.dur_mu, params.dur_sigma, ("dur_mu", "dur_sigma"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let events = seq
        .events
        .iter()
        .map(|e| {
            let d = F::from(e.duration).expect("tick count converts to float");
            let o = F::from(e.onset).expect("tick count converts to float");
            let shift = onset.sample(&mut rng);
            let grow = dur.sample(&mut rng);
            NoteLevelEvent { onset: o + d * shift, midi: e.midi, duration: d + d * grow }
        })
        .collect();
    Ok(NoteLevelSeq { events, meter: seq.meter.clone(), measures: seq.measures })
}

fn round_even<F: Float>(x: F) -> i64 {
    let x = x.to_f64().unwrap_or(0.0).round_ties_even();
    x.to_i64().unwrap_or(if x > 0.0 { i64::MAX } else { 0 })
}

/// Round onto the tick grid (half to even), keep onsets at or after 0 and
/// durations at least 1 tick, and restore (onset, pitch, duration) order.
pub fn snap_to_grid<F: Float>(seq: &NoteLevelSeq<F>) -> GridSeq {
    let mut events: Vec<NoteLevelEvent<i64>> = seq
        .events
        .iter()
        .map(|e| NoteLevelEvent {
            onset: round_even(e.onset).max(0),
            midi: e.midi,
            duration: round_even(e.duration).max(1),
        })
        .collect();
    events.sort_by_key(|e| (e.onset, e.midi, e.duration));
    NoteLevelSeq { events, meter: seq.meter.clone(), measures: seq.measures }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notation::TimeSignature;

    fn grid(events: &[(i64, u8, i64)]) -> GridSeq {
        NoteLevelSeq {
            events: events.iter().map(|&(onset, midi, duration)| NoteLevelEvent { onset, midi, duration }).collect(),
            meter: vec![(0, TimeSignature::common())],
            measures: 1,
        }
    }

    #[test]
    fn zero_variance_limit() {
        let s = grid(&[(0, 60, 24), (24, 62, 10)]);
        let p = PerturbParams { onset_sigma: 0.0, dur_sigma: 0.0, ..PerturbParams::default() };
        let out: NoteLevelSeq<f64> = perturb(&s, &p).unwrap();
        assert_eq!(out.events[0].onset, 0.0);
        assert_eq!(out.events[1].onset, 24.0);
        assert!((out.events[0].duration - 43.2).abs() < 1e-9);
        assert!((out.events[1].duration - 18.0).abs() < 1e-9);
    }

    #[test]
    fn same_seed_same_output() {
        let s = grid(&[(0, 60, 24), (24, 62, 12), (36, 64, 12)]);
        let p = PerturbParams::default().with_seed(7);
        let a: NoteLevelSeq<f64> = perturb(&s, &p).unwrap();
        let b: NoteLevelSeq<f64> = perturb(&s, &p).unwrap();
        assert_eq!(a, b);
        let c: NoteLevelSeq<f64> = perturb(&s, &p.with_seed(8)).unwrap();
        assert_ne!(a, c);
        let f: NoteLevelSeq<f32> = perturb(&s, &p).unwrap();
        assert_eq!(f.events.len(), 3);
    }

    #[test]
    fn rejects_bad_parameters() {
        let s = grid(&[]);
        let p = PerturbParams { onset_sigma: -0.1, ..PerturbParams::default() };
        assert!(matches!(perturb::<f64>(&s, &p), Err(PerturbError::Sigma { name: "onset_sigma", .. })));
        let p = PerturbParams { dur_mu: f64::NAN, ..PerturbParams::default() };
        assert!(matches!(perturb::<f64>(&s, &p), Err(PerturbError::Mean { name: "dur_mu", .. })));
    }

    #[test]
    fn snapping() {
        let s = NoteLevelSeq {
            events: vec![
                NoteLevelEvent { onset: 23.4, midi: 60, duration: 0.3 },
                NoteLevelEvent { onset: 23.5, midi: 61, duration: 2.5 },
                NoteLevelEvent { onset: 22.5, midi: 62, duration: 3.5 },
                NoteLevelEvent { onset: -3.0, midi: 63, duration: -2.0 },
            ],
            meter: vec![(0, TimeSignature::common())],
            measures: 1,
        };
        let g = snap_to_grid(&s);
        let got: Vec<_> = g.events.iter().map(|e| (e.onset, e.midi, e.duration)).collect();
        assert_eq!(got, vec![(0, 63, 1), (22, 62, 4), (23, 60, 1), (24, 61, 2)]);
    }
}
