use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qframe::channel::{DriftParams, DEFAULT_SIGMA_RESIDUAL};
use qframe::framing::{
    duty_cycle_report, measurement_sequence, module_for_frame, run_session, sift, BobClick, CFrameHeader, DecoyMixture, Encoding,
    FrameKind, IntensityClass, LinkConfig, Pattern, Protocol, QFrame, SessionSchedule,
};
use qframe::jones::{Polarization, StokesVector};
use qframe::photonics::LinkParams;

fn schedule(pattern: Pattern, gate_rate: f64) -> SessionSchedule {
    SessionSchedule { gate_rate, pattern, ..Default::default() }
}

fn arb_pol() -> impl Strategy<Value = Polarization> {
    (0usize..4).prop_map(|i| Polarization::ALL[i])
}

proptest! {
    #[test]
    fn header_round_trips(
        sender in any::<u16>(),
        receiver in any::<u16>(),
        enc in 0usize..2,
        proto in 0usize..3,
        pol in arb_pol(),
        ms in 18u16..=u16::MAX,
    ) {
        let h = CFrameHeader {
            sender_addr: sender,
            receiver_addr: receiver,
            encoding: Encoding::ALL[enc],
            protocol: Protocol::ALL[proto],
            stabilization_pol: pol,
            duration: ms as f64 / 1000.0,
        };
        prop_assert_eq!(CFrameHeader::from_bytes(&h.to_bytes().unwrap()).unwrap(), h);
        prop_assert_eq!(CFrameHeader::from_pulses(&h.to_pulses().unwrap()).unwrap(), h);
    }

    #[test]
    fn single_pulse_errors_are_caught(pol in arb_pol(), idx in 8usize..56, flip in 1u8..4) {
        let h = CFrameHeader::new(pol, 5.0).unwrap();
        let mut pulses = h.to_pulses().unwrap();
        let code = Polarization::ALL.iter().position(|p| *p == pulses[idx]).unwrap() as u8;
        pulses[idx] = Polarization::ALL[((code ^ flip) & 3) as usize];
        prop_assert!(CFrameHeader::from_pulses(&pulses).is_err());
    }
}

#[test]
fn header_rejects_sub_response_time_frames() {
    assert!(CFrameHeader::new(Polarization::H, 0.010).is_err());
    assert!(CFrameHeader::new(Polarization::H, 0.018).is_ok());
    assert!(CFrameHeader::new(Polarization::H, 70.0).is_err());
}

#[test]
fn duty_cycle_of_default_schedule() {
    let d = duty_cycle_report(&SessionSchedule::default());
    assert!((d.current - 2.0 / 7.0).abs() < 1e-15);
    assert!((d.projected - 2.0 / 2.018).abs() < 1e-12);
}

#[test]
fn every_burst_follows_its_lock() {
    for pattern in [Pattern::TwoDetector, Pattern::FourDetector, Pattern::Production] {
        let sch = schedule(pattern, 2_000.0);
        let out = run_session(&sch, &LinkConfig::default(), 7.0 * 64.0, 5, 0).unwrap();
        let seq = measurement_sequence(pattern);
        assert_eq!(out.log.len(), 128);
        for pair in out.log.chunks(2) {
            let (c, q) = (&pair[0], &pair[1]);
            assert_eq!((c.kind, q.kind), (FrameKind::Cframe, FrameKind::Qdata));
            assert_eq!(c.frame_idx, q.frame_idx);
            assert!(q.t_start >= c.t_start + sch.cframe_s - 1e-9);
            let k = c.frame_idx as usize;
            let m = module_for_frame(pattern, k);
            assert_eq!(c.module, Some(m));
            assert_eq!(q.stab_pol[m], Some(seq[k % seq.len()].cframe));
            assert_eq!(c.stab_basis, Some(seq[k % seq.len()].cframe.basis()));
        }
    }
}

#[test]
fn four_detector_sifting_never_crosses_bases() {
    let link = LinkConfig { drift: DriftParams::none(), ..Default::default() };
    let sch = SessionSchedule { mixture: DecoyMixture::signal_only(), ..schedule(Pattern::Production, 20_000.0) };
    let out = run_session(&sch, &link, 7.0 * 32.0, 6, 1_000_000).unwrap();
    let (alice, bob) = &out.keys;
    assert!(alice.len() > 1000);
    let errors = alice.bits.iter().zip(&bob.bits).filter(|(a, b)| a != b).count();
    // a crossed basis would contribute 50 % errors on a quarter of the key
    assert!((errors as f64) < 0.05 * alice.len() as f64, "{errors} of {}", alice.len());
    let cross: u64 = out.counts.iter().filter(|(k, _)| k.is_correct_detector().is_none()).map(|(_, c)| c.triggers).sum();
    assert!(cross > 0);
}

#[test]
fn sift_keeps_matching_bases_only() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let sch = SessionSchedule { gate_rate: 500.0, ..Default::default() };
    let header = CFrameHeader::new(Polarization::H, 5.0).unwrap();
    let frames: Vec<QFrame> = (0..3).map(|_| QFrame::generate(header, &sch, None, &mut rng)).collect();
    let bob: Vec<Vec<Option<BobClick>>> = frames
        .iter()
        .map(|f| {
            f.qdata
                .iter()
                .enumerate()
                .map(|(i, s)| (i % 3 != 0).then_some(BobClick { basis: qframe::jones::Basis::Linear, bit: s.bit }))
                .collect()
        })
        .collect();
    let (a, b) = sift(&frames, &bob).unwrap();
    let expected = frames
        .iter()
        .flat_map(|f| f.qdata.iter().enumerate())
        .filter(|(i, s)| i % 3 != 0 && s.basis == qframe::jones::Basis::Linear)
        .count();
    assert_eq!(a.len(), expected);
    assert_eq!(a.bits, b.bits);
    assert!(sift(&frames[..2], &bob).is_err());
}

fn mean_pairwise_angle(v: &[StokesVector]) -> f64 {
    let mut sum = 0.0;
    let mut n = 0u64;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            sum += v[i].angle_to(&v[j]);
            n += 1;
        }
    }
    sum / n as f64
}

#[test]
fn stokes_log_clusters_only_with_stabilizer() {
    let sch = SessionSchedule { cframe_s: 5.0, ..schedule(Pattern::TwoDetector, 50.0) };
    let day = 10.0 * 3600.0;
    let off = LinkConfig { stabilizer_enabled: false, ..Default::default() };
    let out = run_session(&sch, &off, day, 7, 0).unwrap();
    let v: Vec<StokesVector> = out.stokes_log.iter().step_by(8).map(|s| s.stokes()).collect();
    let spread = mean_pairwise_angle(&v);
    assert!(spread > 1.0, "{spread}");

    let on = run_session(&sch, &LinkConfig::default(), 4.0 * 3600.0, 7, 0).unwrap();
    let target = StokesVector::new(1.0, 0.0, 0.0);
    let worst = on.stokes_log.iter().map(|s| s.stokes().angle_to(&target)).fold(0.0, f64::max);
    assert!(worst < 5.0 * DEFAULT_SIGMA_RESIDUAL, "{worst}");
}

#[test]
fn decoy_classes_follow_the_mixture() {
    let sch = schedule(Pattern::TwoDetector, 50_000.0);
    let out = run_session(&sch, &LinkConfig::default(), 7.0 * 16.0, 8, 0).unwrap();
    let mut triggers = [0u64; 3];
    for (k, c) in out.counts.iter() {
        if k.detector_id == 0 {
            triggers[k.intensity_class.index()] += c.triggers;
        }
    }
    let total: u64 = triggers.iter().sum();
    let mix = DecoyMixture::default();
    for (i, p) in [mix.signal, mix.decoy, mix.vacuum].iter().enumerate() {
        let f = triggers[i] as f64 / total as f64;
        assert!((f - p).abs() < 5.0 * (p * (1.0 - p) / total as f64).sqrt() + 0.01, "{i}: {f}");
    }
    let g = out.counts.gain(IntensityClass::Vacuum).unwrap();
    let lp = LinkParams::default();
    assert!((g.q - lp.y0()).abs() < 5.0 * g.sigma_q + 1e-5, "{} vs {}", g.q, lp.y0());
}

#[test]
fn timeline_length_is_count_arithmetic() {
    let sch = schedule(Pattern::TwoDetector, 1_000.0);
    for duration in [7.0, 69.9, 70.0, 700.5] {
        let out = run_session(&sch, &LinkConfig::default(), duration, 9, 0).unwrap();
        assert_eq!(out.qber_timeline.len() as u64, (duration / 7.0f64).floor() as u64);
        assert_eq!(out.sift.gates, out.qber_timeline.len() as u64 * 2_000);
    }
}
