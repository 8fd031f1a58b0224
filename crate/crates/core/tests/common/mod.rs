//! Exact path-enumeration oracle for the whole protocol, written apart from
//! the library's sampling code. States are explicit amplitude vectors over
//! half-slots; every branch (label, decoherence, Eve's choice, Eve's slot,
//! Eve's coin, Bob's arm, Bob's outcome) is walked with its probability.

#![allow(dead_code)]

use std::collections::BTreeMap;

const SLOTS: usize = 8;

/// A density operator diagonal in "which pure component": (weight, amplitudes).
#[derive(Clone, Debug)]
pub struct Ensemble(pub Vec<(f64, [f64; SLOTS])>);

pub fn pure_pair(first: usize) -> Ensemble {
    let mut a = [0.0; SLOTS];
    a[first] = 0.5f64.sqrt();
    a[first + 1] = 0.5f64.sqrt();
    Ensemble(vec![(1.0, a)])
}

pub fn half(slot: usize) -> Ensemble {
    let mut a = [0.0; SLOTS];
    a[slot] = 1.0;
    Ensemble(vec![(1.0, a)])
}

pub fn mixed_pair(first: usize) -> Ensemble {
    let Ensemble(mut v) = half(first);
    v[0].0 = 0.5;
    v.push((0.5, half(first + 1).0[0].1));
    Ensemble(v)
}

impl Ensemble {
    pub fn time(&self) -> BTreeMap<usize, f64> {
        let mut m = BTreeMap::new();
        for (w, a) in &self.0 {
            for (t, x) in a.iter().enumerate() {
                if *x != 0.0 {
                    *m.entry(t).or_default() += w * x * x;
                }
            }
        }
        m
    }

    /// (destructive, slot) → probability, with destructive = true for the π port.
    pub fn mz(&self) -> BTreeMap<(bool, usize), f64> {
        let mut m = BTreeMap::new();
        for (w, a) in &self.0 {
            for t in 1..SLOTS {
                let d = 0.5 * (a[t] - a[t - 1]);
                let c = 0.5 * (a[t] + a[t - 1]);
                if d * d > 0.0 {
                    *m.entry((true, t)).or_default() += w * d * d;
                }
                if c * c > 0.0 {
                    *m.entry((false, t)).or_default() += w * c * c;
                }
            }
        }
        m
    }
}

/// Labels as the first slot of the pulse: 1..=4. Key bit for 2 and 3.
fn bit_of(first: usize) -> Option<u8> {
    match first {
        2 => Some(0),
        3 => Some(1),
        _ => None,
    }
}

/// Eve's record of one round: (measured slot, guessed bit).
pub type Observation = (Option<usize>, Option<u8>);

#[derive(Debug, Default, Clone)]
pub struct Exact {
    /// Probability per round that the round is kept.
    pub kept: f64,
    pub kept_error: f64,
    /// (alice_bit, eve observation) → probability, among all rounds (not normalized).
    pub joint_alice_eve: BTreeMap<(u8, Observation), f64>,
    pub interf_detected: f64,
    pub middle_destructive: f64,
    pub leakage: f64,
    pub anomaly: f64,
}

impl Exact {
    pub fn qber(&self) -> f64 {
        self.kept_error / self.kept
    }

    pub fn eve_mi(&self) -> f64 {
        let total: f64 = self.joint_alice_eve.values().sum();
        let mut pa: BTreeMap<u8, f64> = BTreeMap::new();
        let mut pe: BTreeMap<(Option<usize>, Option<u8>), f64> = BTreeMap::new();
        for ((a, e), p) in &self.joint_alice_eve {
            *pa.entry(*a).or_default() += p / total;
            *pe.entry(*e).or_default() += p / total;
        }
        self.joint_alice_eve
            .iter()
            .filter(|(_, &p)| p > 0.0)
            .map(|((a, e), &p)| {
                let p = p / total;
                p * (p / (pa[a] * pe[e])).log2()
            })
            .sum()
    }

    pub fn d_estimate(&self) -> f64 {
        4.0 * self.middle_destructive / self.interf_detected
    }

    pub fn d_estimate_with_leakage(&self) -> f64 {
        4.0 * (self.middle_destructive + self.leakage) / self.interf_detected
    }
}

/// Eve's answer to a measured slot with a full-duration pulse: (label first slot, guess).
fn long_resend(slot: usize, coin_high: bool) -> (usize, Option<u8>) {
    match slot {
        1 => (1, None),
        2 => (2, Some(0)),
        3 => {
            if coin_high {
                (3, Some(1))
            } else {
                (2, Some(0))
            }
        }
        4 => (3, Some(1)),
        5 => (4, None),
        _ => unreachable!(),
    }
}

fn short_guess(slot: usize, coin_high: bool) -> Option<u8> {
    match slot {
        2 => Some(0),
        3 => Some(u8::from(coin_high)),
        4 => Some(1),
        _ => None,
    }
}

/// Walks every branch at eta = 1.
pub fn enumerate(omega_long: f64, omega_short: f64, d: f64) -> Exact {
    let mut ex = Exact::default();
    for first in 1..=4usize {
        let p_label = 0.25;
        for (p_dec, ens) in [(1.0 - d, pure_pair(first)), (d, mixed_pair(first))] {
            if p_dec == 0.0 {
                continue;
            }
            // (probability, state arriving at Bob, eve observation, wrong-label long resend)
            let mut branches: Vec<(f64, Ensemble, Observation, bool)> = Vec::new();
            branches.push((1.0 - omega_long - omega_short, ens.clone(), (None, None), false));
            for (slot, p_slot) in ens.time() {
                for coin_high in [false, true] {
                    let p = p_slot * 0.5;
                    let (resent, guess) = long_resend(slot, coin_high);
                    branches.push((omega_long * p, pure_pair(resent), (Some(slot), guess), resent != first));
                    branches.push((omega_short * p, half(slot), (Some(slot), short_guess(slot, coin_high)), false));
                }
            }
            for (p_eve, at_bob, obs, wrong) in branches {
                let base = p_label * p_dec * p_eve;
                if base == 0.0 {
                    continue;
                }
                // key arm
                for (slot, p) in at_bob.time() {
                    let p = base * 0.5 * p;
                    let Some(a_bit) = bit_of(first) else { continue };
                    match slot {
                        2 | 4 => {
                            let b_bit = u8::from(slot == 4);
                            ex.kept += p;
                            if a_bit != b_bit {
                                ex.kept_error += p;
                            }
                            *ex.joint_alice_eve.entry((a_bit, obs)).or_default() += p;
                        }
                        1 | 5 => ex.anomaly += p,
                        _ => {}
                    }
                }
                // interferometer arm
                for ((destructive, slot), p) in at_bob.mz() {
                    let p = base * 0.5 * p;
                    ex.interf_detected += p;
                    if destructive && slot == first + 1 {
                        if wrong {
                            ex.leakage += p;
                        } else {
                            ex.middle_destructive += p;
                        }
                    }
                }
            }
        }
    }
    ex
}

/// Total variation distance between two discrete distributions.
pub fn total_variation<K: Ord + Clone>(a: &BTreeMap<K, f64>, b: &BTreeMap<K, f64>) -> f64 {
    let mut keys: Vec<K> = a.keys().cloned().collect();
    keys.extend(b.keys().cloned());
    keys.sort();
    keys.dedup();
    0.5 * keys.iter().map(|k| (a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0)).abs()).sum::<f64>()
}

/// Stream wrapper that keeps a copy of every byte written through it.
pub struct Tee<S> {
    inner: S,
    written: std::sync::Arc<std::sync::Mutex<Vec<u8>>>,
}

impl<S> Tee<S> {
    pub fn new(inner: S) -> Self {
        Tee { inner, written: Default::default() }
    }

    pub fn log(&self) -> std::sync::Arc<std::sync::Mutex<Vec<u8>>> {
        self.written.clone()
    }
}

impl<S: std::io::Read> std::io::Read for Tee<S> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        self.inner.read(buf)
    }
}

impl<S: std::io::Write> std::io::Write for Tee<S> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.written.lock().unwrap().extend_from_slice(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}
