//! Law-of-large-numbers checks of the samplers against their analytic maps.

mod common;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use timecode_qkd::adversary::resend_rule_long;
use timecode_qkd::channel::{apply_channel, ChannelParams};
use timecode_qkd::protocol::{alice_emit, bob_route, Arm, StateLabel};
use timecode_qkd::timebin::{sample_mz, sample_time, DetectionEvent, Port, PulseState, TimeSlot};

const N: usize = 1_000_000;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn coherent_pair_time_frequency() {
    let mut r = rng(1);
    let hits = (0..N)
        .filter(|_| sample_time(PulseState::CoherentPair(TimeSlot::at(2)), r.random()) == Some(TimeSlot::at(2)))
        .count();
    let f = hits as f64 / N as f64;
    assert!((f - 0.5).abs() < 0.002, "{f}");
}

#[test]
fn half_pulse_constructive_frequency() {
    let mut r = rng(2);
    let target = DetectionEvent::Interferometer(Port::Constructive, TimeSlot::at(4));
    let hits = (0..N).filter(|_| sample_mz(PulseState::Half(TimeSlot::at(3)), r.random()) == target).count();
    let f = hits as f64 / N as f64;
    assert!((f - 0.25).abs() < 0.002, "{f}");
}

#[test]
fn coherent_pair_never_hits_its_dark_cell() {
    let mut r = rng(3);
    let dark = DetectionEvent::Interferometer(Port::Destructive, TimeSlot::at(2));
    assert!((0..N).all(|_| sample_mz(PulseState::CoherentPair(TimeSlot::at(1)), r.random()) != dark));
}

#[test]
fn channel_loss_and_decoherence_rates() {
    let p = ChannelParams::new(0.8, 0.3).unwrap();
    let mut r = rng(4);
    let (mut vacuum, mut mixed) = (0usize, 0usize);
    for _ in 0..N {
        match apply_channel(PulseState::CoherentPair(TimeSlot::at(2)), p, r.random(), r.random()) {
            PulseState::Vacuum => vacuum += 1,
            PulseState::MixedPair(i) => {
                assert_eq!(i, TimeSlot::at(2));
                mixed += 1
            }
            PulseState::CoherentPair(i) => assert_eq!(i, TimeSlot::at(2)),
            other => panic!("{other:?}"),
        }
    }
    let fv = vacuum as f64 / N as f64;
    let fm = mixed as f64 / (N - vacuum) as f64;
    assert!((fv - 0.2).abs() < 0.005, "{fv}");
    assert!((fm - 0.3).abs() < 0.005, "{fm}");
}

#[test]
fn labels_and_routing_uniform() {
    let mut r = rng(5);
    let mut counts: BTreeMap<StateLabel, usize> = BTreeMap::new();
    let mut key = 0usize;
    for _ in 0..N {
        *counts.entry(alice_emit(r.random()).0).or_default() += 1;
        key += usize::from(bob_route(r.random()) == Arm::Key);
    }
    for (label, c) in counts {
        let f = c as f64 / N as f64;
        assert!((f - 0.25).abs() < 0.002, "{label}: {f}");
    }
    let f = key as f64 / N as f64;
    assert!((f - 0.5).abs() < 0.002, "{f}");
}

#[test]
fn slot_three_resend_coin_is_fair() {
    let mut r = rng(6);
    let s23 = (0..N).filter(|_| resend_rule_long(TimeSlot::at(3), r.random()).unwrap().0 == StateLabel::S23).count();
    let f = s23 as f64 / N as f64;
    assert!((f - 0.5).abs() < 0.002, "{f}");
}
