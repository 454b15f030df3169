//! End-to-end acceptance checks. Each criterion prints one PASS or FAIL line;
//! the process fails if any criterion fails.

use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;

use qframe::binary_entropy;
use qframe::config::RunConfig;
use qframe::decoy::{optimal_mu, rate_a, rate_b, rate_c, MeasuredGains};
use qframe::framing::run_session;
use qframe::jones::{
    basic_unit_matrix, basic_unit_output_h, conjugation_identity_check, intensity_modulator_transmission, BasicUnitPhases, JonesMatrix,
    JonesVector, ModulationSetting, Polarization,
};
use qframe::ldpc::{
    check_node_update, decision_agreement, design_matrix, init_beliefs, sweep_performance, throughput_model, variable_node_update,
    Arithmetic, DesignSpec, LdpcError, ParityCheckMatrix, SweepConfig, SweepRow, DEFAULT_CLOCK_HZ, DEFAULT_CYCLES_PER_ITERATION,
};
use qframe::photonics::{
    db_to_prob, p_correct, p_correct_at, p_wrong, p_wrong_at, prob_to_db, qber_kgp, simulate_detection, DetectorModel, LinkParams,
    DETECTOR_EFFICIENCY, TABLE_HH_CORRECT_DB, TABLE_HH_WRONG_DB, TABLE_MU, TABLE_Y0_HALF,
};
use qframe::rng::{stream, Stream};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn within_budget(v: Verdict, elapsed: Duration, budget: Option<Duration>) -> Verdict {
    match budget {
        Some(b) if elapsed > b => verdict(false, format!("{}; runtime {:.1?} over budget {:.0?}", v.detail, elapsed, b)),
        _ => verdict(v.pass, format!("{}; runtime {:.1?}", v.detail, elapsed)),
    }
}

fn faraday_identity() -> Verdict {
    let mut rng = stream(101, Stream::Channel);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let m = if i % 2 == 0 { JonesMatrix::random_unitary(&mut rng) } else { JonesMatrix::random_general(&mut rng) };
        let v = JonesVector::random(&mut rng);
        let (lhs, rhs) = conjugation_identity_check(&m, &v);
        worst = worst.max(lhs.max_abs_diff(&rhs));
    }
    verdict(worst < 1e-10, format!("max deviation {worst:.2e} over 1000 matrices"))
}

fn basic_unit_invariance() -> Verdict {
    let mut rng = stream(102, Stream::Channel);
    let h = JonesVector::horizontal();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let setting = ModulationSetting::new(rng.random_range(-PI..PI), rng.random_range(0.0..TAU));
        let phases = BasicUnitPhases::default();
        let reference = basic_unit_matrix(&setting, 0.0, &JonesMatrix::identity(), &phases).expect("lossless").apply(&h);
        let smf = JonesMatrix::random_unitary(&mut rng);
        let out = basic_unit_matrix(&setting, rng.random_range(0.0..TAU), &smf, &phases).expect("lossless").apply(&h);
        worst = worst.max(out.bloch_distance(&reference));
    }
    let mut worst_overlap: f64 = 0.0;
    for k in 0..=1000 {
        let phi = k as f64 * TAU / 1000.0;
        let states: Vec<(Polarization, JonesVector)> =
            Polarization::ALL.iter().map(|&p| (p, basic_unit_output_h(&ModulationSetting::for_polarization(p, phi)))).collect();
        for (p, u) in &states {
            for (q, v) in &states {
                if p.basis() != q.basis() {
                    worst_overlap = worst_overlap.max((u.overlap(v) - 0.5).abs());
                }
            }
        }
    }
    verdict(
        worst < 1e-10 && worst_overlap < 1e-10,
        format!("max Bloch distance {worst:.2e} over 1000 draws; max |overlap - 0.5| {worst_overlap:.2e}"),
    )
}

fn modulator_flatness() -> Verdict {
    let mut worst: f64 = 0.0;
    for k in 0..=32 {
        let d = k as f64 * PI / 32.0;
        let t0 = intensity_modulator_transmission(&ModulationSetting::new(d, 0.0));
        for j in 1..=1000 {
            let t = intensity_modulator_transmission(&ModulationSetting::new(d, j as f64 * TAU / 1000.0));
            worst = worst.max((t - t0).abs());
        }
    }
    verdict(worst < 1e-12, format!("max transmission deviation {worst:.2e}"))
}

fn detection_oracle() -> Verdict {
    let mut rng = stream(104, Stream::Detector);
    let gates = 1_000_000u64;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let lp = LinkParams {
            mu: rng.random_range(0.05..1.5),
            t: rng.random_range(0.01..1.0),
            eta: rng.random_range(0.05..0.3),
            a: rng.random_range(0.85..1.0),
            y0_half: rng.random_range(0.0..2e-3),
            ..LinkParams::table_regime()
        };
        let det = DetectorModel { deadtime: 0.0, ..DetectorModel::new(lp) };
        let (u, h) = (JonesMatrix::identity(), JonesVector::horizontal());
        let mut clicks = [0u64; 2];
        for _ in 0..gates {
            let g = simulate_detection(&h, lp.mu, &det, &u, &mut rng);
            clicks[0] += g.raw[0] as u64;
            clicks[1] += g.raw[1] as u64;
        }
        for (k, p) in [p_correct(&lp), p_wrong(&lp)].into_iter().enumerate() {
            let sigma = (p * (1.0 - p) / gates as f64).sqrt();
            worst = worst.max((clicks[k] as f64 / gates as f64 - p).abs() / sigma);
        }
    }
    verdict(worst < 3.0, format!("worst deviation {worst:.2} sigma over 20 draws x 1e6 gates"))
}

fn table_regime() -> Verdict {
    let fit = LinkParams::fit_from_cells(
        TABLE_MU,
        db_to_prob(TABLE_HH_CORRECT_DB),
        db_to_prob(TABLE_HH_WRONG_DB),
        DETECTOR_EFFICIENCY,
        TABLE_Y0_HALF,
    );
    let lp = match fit {
        Ok(lp) => LinkParams { mu: TABLE_MU, ..lp },
        Err(e) => return verdict(false, format!("fit failed: {e}")),
    };
    let pc = prob_to_db(p_correct(&lp));
    let pw = prob_to_db(p_wrong(&lp));
    let mus: Vec<f64> = (1..=60).map(|i| i as f64 * 0.025).collect();
    let qk: Vec<(f64, f64)> = mus.iter().map(|&mu| qber_kgp(p_correct_at(&lp, mu), p_wrong_at(&lp, mu)).expect("clicks")).collect();
    let falling = qk.windows(2).all(|w| w[1].0 < w[0].0);
    let flattens = qk[49].0 - qk[59].0 < 0.05 * (qk[0].0 - qk[9].0);
    let dark = 2.0 * lp.y0_half;
    let db = |i: usize| 10.0 * (qk[i].1 - dark).log10();
    let slope = (db(11) - db(0)) / (mus[11] / mus[0]).log10();
    let linear = (slope - 10.0).abs() < 0.5;
    verdict(
        (pc + 25.2).abs() <= 0.4 && (-41.0..=-38.0).contains(&pw) && falling && flattens && linear,
        format!(
            "t {:.4}, a {:.4}: correct {pc:.2} dB, wrong {pw:.2} dB; QBER falling {falling}, flattening {flattens}; low-mu KGP slope {slope:.2} dB/decade",
            lp.t, lp.a
        ),
    )
}

fn long_term_stability() -> Verdict {
    let duration = 37.0 * 3600.0;
    let mut cfg = RunConfig::default();
    cfg.schedule.gate_rate = 20_000.0;
    let sch = cfg.session_schedule();
    let out = match run_session(&sch, &cfg.link_config(), duration, cfg.seed, 0) {
        Ok(o) => o,
        Err(e) => return verdict(false, format!("session failed: {e}")),
    };
    let all: Vec<f64> = out.qber_timeline.iter().filter_map(|q| q.qber_window).collect();
    let filled: Vec<f64> = out.qber_timeline.iter().filter(|q| q.t >= sch.qber_window_s).filter_map(|q| q.qber_window).collect();
    let mean = all.iter().sum::<f64>() / all.len().max(1) as f64;
    let lo = filled.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = filled.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut off = RunConfig::default();
    off.schedule.gate_rate = 5_000.0;
    off.stabilizer.enabled = false;
    let out_off = match run_session(&off.session_schedule(), &off.link_config(), duration, off.seed, 0) {
        Ok(o) => o,
        Err(e) => return verdict(false, format!("session failed: {e}")),
    };
    let w: Vec<f64> = out_off.qber_timeline.iter().filter_map(|q| q.qber_window).collect();
    let mean_off = w.iter().sum::<f64>() / w.len().max(1) as f64;
    verdict(
        (0.025..=0.035).contains(&mean) && hi - lo <= 0.01 && (0.45..=0.55).contains(&mean_off),
        format!(
            "stabilized: mean {:.2} %, {:.2}-{:.2} % once the window fills ({} frames at 20 kHz); unstabilized mean {:.1} %",
            100.0 * mean,
            100.0 * lo,
            100.0 * hi,
            all.len(),
            100.0 * mean_off
        ),
    )
}

fn decoy_analytics() -> Verdict {
    let lp = LinkParams::table_regime();
    let mu_opt = match optimal_mu(&lp, lp.nu) {
        Ok(m) => m,
        Err(e) => return verdict(false, format!("optimal mu: {e}")),
    };
    let ratio = rate_b(&lp, 0.6, lp.nu).expect("valid decoy").s / rate_a(&lp, 0.6).s;

    let mut cfg = RunConfig { link: lp, ..RunConfig::default() };
    cfg.stabilizer.sigma_residual = 0.0;
    let sch = cfg.session_schedule();
    let duration = 350.0;
    let out = match run_session(&sch, &cfg.link_config(), duration, cfg.seed, 0) {
        Ok(o) => o,
        Err(e) => return verdict(false, format!("session failed: {e}")),
    };
    let gates = out.sift.gates;
    let c = MeasuredGains::from_counts(&out.counts, lp.mu, lp.nu).and_then(|m| rate_c(&m, lp.f_ec));
    let b = rate_b(&lp, lp.mu, lp.nu).expect("valid decoy").s;
    let (c_ok, c_text) = match c {
        Ok(c) => {
            let sigma = c.sigma.unwrap_or(0.0);
            ((c.s - b).abs() <= 3.0 * sigma, format!("curve C {:.3e} +- {:.1e} vs B {:.3e} at mu {}", c.s, sigma, b, lp.mu))
        }
        Err(e) => (false, format!("curve C: {e}")),
    };
    verdict(
        (mu_opt - 0.62).abs() <= 0.02 && (0.85..=0.95).contains(&ratio) && gates >= 100_000_000 && c_ok,
        format!("mu_opt {mu_opt:.4}; B/A at 0.6 {ratio:.3}; {c_text} over {gates} gates"),
    )
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

fn worked_example() -> Verdict {
    let mut bad = Vec::new();
    let h = ParityCheckMatrix::from_rows(3, vec![vec![0, 1, 2]]).expect("valid");
    for (p, want) in [(0u8, [0.82, 0.82, 0.18]), (1u8, [0.18, 0.18, 0.82])] {
        let mut s = init_beliefs(&h, &[1, 1, 0], 0.1).expect("valid");
        check_node_update(&mut s, &h, &[p]).expect("valid");
        for j in 0..3 {
            if round4(s.r1[j]) != want[j] {
                bad.push(format!("check table p={p} bit {j}: {:.4}", s.r1[j]));
            }
        }
    }
    let h = ParityCheckMatrix::from_rows(7, vec![vec![0, 1, 2], vec![0, 3, 4], vec![0, 5, 6]]).expect("valid");
    let rows: [([u8; 3], [f64; 4]); 4] = [
        ([0, 0, 0], [0.0006, 0.4963, 0.0012, 0.9988]),
        ([1, 0, 0], [0.0027, 0.1089, 0.0238, 0.9762]),
        ([1, 1, 0], [0.0121, 0.0239, 0.3361, 0.6639]),
        ([1, 1, 1], [0.0551, 0.0052, 0.9131, 0.0869]),
    ];
    let mut errata = 0;
    for (parity, [q0, q1, p0, p1]) in rows {
        let mut s = init_beliefs(&h, &[1, 1, 0, 1, 0, 1, 0], 0.1).expect("valid");
        check_node_update(&mut s, &h, &parity).expect("valid");
        let r: Vec<f64> = h.col_edges(0).iter().map(|&e| s.r1[e as usize]).collect();
        let q1_hat = s.prior1[0] * r.iter().product::<f64>();
        let q0_hat = (1.0 - s.prior1[0]) * r.iter().map(|x| 1.0 - x).product::<f64>();
        variable_node_update(&mut s, &h);
        for (name, got, want) in [("q0", q0_hat, q0), ("q1", q1_hat, q1), ("P'0", s.post0[0], p0), ("P'1", s.post1[0], p1)] {
            if round4(got) == want {
                continue;
            }
            // 0.9 * 0.82^3 = 0.496231 is printed as 0.4963
            if parity == [0, 0, 0] && name == "q1" && round4(got) == 0.4962 && (got - 0.9 * 0.82f64.powi(3)).abs() < 1e-12 {
                errata += 1;
                continue;
            }
            bad.push(format!("{name} for parity {parity:?}: {got:.6} vs {want}"));
        }
    }
    let detail = if bad.is_empty() {
        format!("all cells at 4 dp; {errata} printed cell off by one in the last digit (row 1 q1 = 0.9 x 0.82^3 = 0.49623)")
    } else {
        bad.join("; ")
    };
    verdict(bad.is_empty(), detail)
}

fn sig4(x: f64) -> String {
    format!("{:.*}", (3 - x.abs().log10().floor() as i32).max(0) as usize, x)
}

fn short_code_performance(h: &ParityCheckMatrix) -> Verdict {
    let cfg = SweepConfig::default();
    let rows = match sweep_performance(h, &[0.025, 0.03, 0.035], 10_000, Arithmetic::Float, &cfg, 1) {
        Ok(r) => r,
        Err(e) => return verdict(false, format!("sweep: {e}")),
    };
    let table = [(0.9900, 4.1070, 52.9319), (0.9165, 8.6785, 25.0494), (0.6980, 17.9455, 12.1146)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (r, (rate, iters, mbps)) in rows.iter().zip(table) {
        let rate_ok = (r.success_rate - rate).abs() <= 0.05;
        // either iteration convention may be the tabulated one
        let iter_ok = [r.mean_iterations, r.mean_iterations_all].iter().any(|m| (m / iters - 1.0).abs() <= 0.3);
        let tp = throughput_model(200, iters, DEFAULT_CLOCK_HZ, DEFAULT_CYCLES_PER_ITERATION);
        let tp_ok = sig4(tp) == sig4(mbps);
        pass &= rate_ok && iter_ok && tp_ok;
        parts.push(format!(
            "{:.1} %: success {:.2} %, iterations {:.2} / {:.2} (all blocks), model {} Mb/s",
            100.0 * r.qber,
            100.0 * r.success_rate,
            r.mean_iterations,
            r.mean_iterations_all,
            sig4(tp)
        ));
    }
    verdict(pass, parts.join("; "))
}

fn ordered_within(lower: &SweepRow, upper: &SweepRow) -> bool {
    let sigma = (lower.success_sigma().powi(2) + upper.success_sigma().powi(2)).sqrt();
    lower.success_rate <= upper.success_rate + 2.0 * sigma
}

fn fixed_point_fidelity(short: &ParityCheckMatrix, long: &ParityCheckMatrix) -> Verdict {
    let cfg = SweepConfig::default();
    let agreement = match decision_agreement(short, 0.03, 10_000, Arithmetic::Fixed(24), Arithmetic::Float, &cfg, 7) {
        Ok(a) => a,
        Err(e) => return verdict(false, format!("agreement: {e}")),
    };
    let grid = [0.025, 0.028, 0.03, 0.032];
    let arithmetics = [Arithmetic::Fixed(12), Arithmetic::Fixed(16), Arithmetic::Fixed(24), Arithmetic::Float];
    let mut sweeps = Vec::new();
    for a in arithmetics {
        match sweep_performance(long, &grid, 100, a, &cfg, 3) {
            Ok(r) => sweeps.push(r),
            Err(e) => return verdict(false, format!("sweep: {e}")),
        }
    }
    let ordered = (0..grid.len()).all(|g| sweeps.windows(2).all(|w| ordered_within(&w[0][g], &w[1][g])));
    let table: Vec<String> = arithmetics
        .iter()
        .zip(&sweeps)
        .map(|(a, rows)| format!("{} {:?}", a.label(), rows.iter().map(|r| r.success_rate).collect::<Vec<_>>()))
        .collect();
    verdict(
        agreement >= 0.99 && ordered,
        format!("24-bit/float agreement {:.2} % on 60x200 at 3 %; 1200x4000 success {}", 100.0 * agreement, table.join(", ")),
    )
}

fn shannon_check(long: &Result<ParityCheckMatrix, LdpcError>) -> Verdict {
    let mut rng = stream(111, Stream::Ldpc);
    let mut rejected = 0;
    let mut wrongly_accepted = Vec::new();
    for _ in 0..200 {
        let n = rng.random_range(50..5000usize);
        let q = rng.random_range(0.005..0.2);
        let bound = n as f64 * binary_entropy(q);
        let m = rng.random_range(1..=(bound.ceil() as usize).max(1));
        if (m as f64) >= bound {
            continue;
        }
        match design_matrix(&DesignSpec::new(n, m, 4, q), &mut rng) {
            Err(LdpcError::ShannonBound { .. }) => rejected += 1,
            other => wrongly_accepted.push(format!("n {n} m {m} q {q:.3}: {:?}", other.map(|r| r.matrix.m()))),
        }
    }
    let bound = 4000.0 * binary_entropy(0.03);
    let accepted = matches!(long, Ok(h) if h.m() == 1200 && h.n() == 4000);
    verdict(
        wrongly_accepted.is_empty() && accepted && (bound - 778.0).abs() < 1.0,
        format!(
            "{rejected} sub-bound configurations rejected{}; 1200x4000 at 3 % accepted {accepted} (bound {bound:.1})",
            if wrongly_accepted.is_empty() { String::new() } else { format!(", accepted: {}", wrongly_accepted.join(", ")) }
        ),
    )
}

fn run_cli(args: &[&str], out: &Path) -> Result<(i32, Vec<u8>), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_qframe")).args(args).arg("--out").arg(out).output().map_err(|e| e.to_string())?;
    Ok((o.status.code().unwrap_or(-1), o.stdout))
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .map(|it| {
            it.filter_map(Result::ok)
                .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap_or_default()))
                .collect()
        })
        .unwrap_or_default();
    v.sort();
    v
}

fn determinism() -> Verdict {
    let scratch = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return verdict(false, e.to_string()),
    };
    let root = scratch.path();
    let cfg = root.join("run.toml");
    if let Err(e) = fs::write(&cfg, "seed = 17\n[schedule]\ngate_rate = 20000.0\n[ldpc]\ntrials = 200\n") {
        return verdict(false, e.to_string());
    }
    let cfg = cfg.to_string_lossy().into_owned();
    let key = root.join("key.txt");
    let rec = root.join("received.txt");
    let key_bits: String = (0..200).map(|i| if (i * 7919) % 13 < 6 { '1' } else { '0' }).collect();
    let rec_bits: String = key_bits
        .chars()
        .enumerate()
        .map(|(i, c)| {
            if i % 50 == 3 {
                if c == '1' {
                    '0'
                } else {
                    '1'
                }
            } else {
                c
            }
        })
        .collect();
    if fs::write(&key, &key_bits).and(fs::write(&rec, &rec_bits)).is_err() {
        return verdict(false, "could not write key files");
    }

    let mut mismatches = Vec::new();
    let mut commands = 0;
    for run in 0..2 {
        let dir = root.join(format!("run{run}"));
        let (k, r) = (key.to_string_lossy().into_owned(), rec.to_string_lossy().into_owned());
        let alist = dir.join("design").join("matrix.alist").to_string_lossy().into_owned();
        let counts = dir.join("sim").join("counts.csv").to_string_lossy().into_owned();
        let syn = dir.join("syn").join("syndrome.txt").to_string_lossy().into_owned();
        let steps: Vec<(&str, Vec<String>)> = vec![
            ("sim", vec!["simulate".into(), "--duration".into(), "70".into()]),
            ("simj", vec!["simulate".into(), "--duration".into(), "70".into(), "--format".into(), "jsonl".into()]),
            ("rates", vec!["keyrate".into(), "--counts".into(), counts]),
            ("design", vec!["ldpc".into(), "design".into()]),
            ("sweep", vec!["ldpc".into(), "sim".into(), "--matrix".into(), alist.clone(), "--qber".into(), "0.03,0.04".into()]),
            ("syn", vec!["ldpc".into(), "syndrome".into(), "--matrix".into(), alist.clone(), "--key".into(), k]),
            (
                "dec",
                vec![
                    "ldpc".into(),
                    "decode".into(),
                    "--matrix".into(),
                    alist,
                    "--received".into(),
                    r,
                    "--syndrome".into(),
                    syn,
                    "--qber".into(),
                    "0.02".into(),
                ],
            ),
        ];
        for (name, args) in steps {
            let mut full: Vec<&str> = vec!["--config", &cfg];
            full.extend(args.iter().map(String::as_str));
            let out_dir = dir.join(name);
            match run_cli(&full, &out_dir) {
                Ok((code, stdout)) if code == 0 || (name == "dec" && code == 4) => {
                    fs::write(dir.join(format!("{name}.stdout")), stdout).ok();
                    commands += 1;
                }
                Ok((code, _)) => return verdict(false, format!("{name} exited with {code}")),
                Err(e) => return verdict(false, format!("{name}: {e}")),
            }
        }
    }
    let (a, b) = (root.join("run0"), root.join("run1"));
    let mut files = 0;
    let mut stack = vec![(a.clone(), b.clone())];
    while let Some((x, y)) = stack.pop() {
        let (cx, cy) = (dir_contents(&x), dir_contents(&y));
        if cx.iter().map(|f| &f.0).ne(cy.iter().map(|f| &f.0)) {
            mismatches.push(format!("{} lists differ", x.display()));
            continue;
        }
        for ((name, bx), (_, by)) in cx.iter().zip(&cy) {
            if x.join(name).is_dir() {
                stack.push((x.join(name), y.join(name)));
            } else {
                files += 1;
                // the two runs only differ in their output paths, which appear in no output
                if bx != by {
                    mismatches.push(name.clone());
                }
            }
        }
    }
    verdict(
        mismatches.is_empty() && files > 10,
        if mismatches.is_empty() {
            format!("{} commands x 2 runs, {files} output files byte-identical", commands / 2)
        } else {
            format!("differing outputs: {}", mismatches.join(", "))
        },
    )
}

fn main() {
    let secs = Duration::from_secs;
    let mut results: Vec<(u32, &str, Verdict)> = Vec::new();
    let mut record = |n: u32, name: &'static str, budget: Option<Duration>, f: &mut dyn FnMut() -> Verdict| {
        let t0 = Instant::now();
        let v = f();
        let v = within_budget(v, t0.elapsed(), budget);
        println!("criterion {n:>2} {}: {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        results.push((n, name, v));
    };

    record(1, "Faraday mirror identity", Some(secs(1)), &mut faraday_identity);
    record(2, "basic-unit invariance and unbiased bases", Some(secs(5)), &mut basic_unit_invariance);
    record(3, "intensity-modulator flatness", None, &mut modulator_flatness);
    record(4, "detection statistics oracle", Some(secs(120)), &mut detection_oracle);
    record(5, "fitted link regime", None, &mut table_regime);
    record(6, "37-hour stability", Some(secs(600)), &mut long_term_stability);
    record(7, "decoy-state analytics", None, &mut decoy_analytics);
    record(8, "LDPC worked example", Some(secs(1)), &mut worked_example);

    let mut rng = stream(1, Stream::Ldpc);
    let short = design_matrix(&DesignSpec::new(200, 60, 12, 0.03), &mut rng).map(|r| r.matrix);
    let mut rng = stream(1, Stream::Ldpc);
    let long = design_matrix(&DesignSpec::new(4000, 1200, 20, 0.03), &mut rng).map(|r| r.matrix);
    record(9, "60x200 LDPC performance", Some(secs(300)), &mut || match &short {
        Ok(h) => short_code_performance(h),
        Err(e) => verdict(false, format!("design: {e}")),
    });
    record(10, "fixed-point fidelity", None, &mut || match (&short, &long) {
        (Ok(s), Ok(l)) => fixed_point_fidelity(s, l),
        _ => verdict(false, "design failed"),
    });
    record(11, "Shannon bound", None, &mut || shannon_check(&long));
    record(12, "CLI determinism", None, &mut determinism);

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!("{} of {} criteria pass", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        eprintln!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}
