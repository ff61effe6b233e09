//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use qmc_core::channel::{evolve, evolve_ode_oracle, kraus_apply};
use qmc_core::cycle::{
    cop_bound_check, cycle_report, iterate_limit_cycle, monte_carlo_oracle, steady_p_plus,
    CopBound, CycleReport, TransitionKernel,
};
use qmc_core::sweep::{run_sweep, BaseParams, Preset, SweepConfig, SweepRow};
use qmc_core::{
    BathSpec, ChannelOptions, CycleSpec, DensityMatrix, Hamiltonian, MeasurementBasis, Regime,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: String) -> Outcome {
    Outcome {
        name,
        passed,
        detail,
    }
}

fn random_state(rng: &mut ChaCha8Rng) -> DensityMatrix {
    loop {
        let (x, y, z) = (
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0f64),
        );
        if x * x + y * y + z * z <= 1.0 {
            return DensityMatrix::from_bloch(x, y, z).unwrap();
        }
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

fn random_params(rng: &mut ChaCha8Rng) -> BaseParams {
    let t_c = rng.random_range(0.05..0.5);
    BaseParams {
        omega: rng.random_range(0.2..2.0),
        theta: rng.random_range(0.0..=PI),
        phi: rng.random_range(0.0..2.0 * PI),
        tau_c: log_uniform(rng, 0.01, 200.0),
        tau_h: log_uniform(rng, 0.01, 200.0),
        gamma_c: log_uniform(rng, 1e-3, 0.2),
        gamma_h: log_uniform(rng, 1e-3, 0.2),
        t_c,
        t_h: t_c * rng.random_range(1.1..4.0),
        include_unitary: rng.random_bool(0.5),
    }
}

fn random_reports(n: usize, seed: u64) -> Vec<(BaseParams, CycleReport)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let p = random_params(&mut rng);
            let r = cycle_report(&p.to_spec().unwrap()).unwrap();
            (p, r)
        })
        .collect()
}

fn preset_rows(preset: Preset, include_unitary: bool) -> Vec<SweepRow> {
    let mut cfg = SweepConfig::preset(preset);
    cfg.base.include_unitary = include_unitary;
    run_sweep(&cfg).unwrap().rows
}

struct Presets {
    // (label, unitary, rows)
    sweeps: Vec<(&'static str, bool, Vec<SweepRow>)>,
}

impl Presets {
    fn load() -> Self {
        let mut sweeps = Vec::new();
        for (label, p) in [("fig2a", Preset::Fig2a), ("fig2b", Preset::Fig2b)] {
            for u in [true, false] {
                sweeps.push((label, u, preset_rows(p, u)));
            }
        }
        Self { sweeps }
    }

    fn get(&self, label: &str, unitary: bool) -> &[SweepRow] {
        &self
            .sweeps
            .iter()
            .find(|(l, u, _)| *l == label && *u == unitary)
            .unwrap()
            .2
    }
}

fn first_law(reports: &[(BaseParams, CycleReport)]) -> Outcome {
    let worst = reports
        .iter()
        .map(|(_, r)| r.first_law_residual())
        .fold(0.0, f64::max);
    outcome(
        "first law",
        worst <= 1e-12,
        format!(
            "{} random specs, worst scaled residual {worst:.2e}",
            reports.len()
        ),
    )
}

fn second_law(reports: &[(BaseParams, CycleReport)], presets: &Presets) -> Outcome {
    let mut worst = reports
        .iter()
        .map(|(_, r)| r.entropy_production)
        .fold(f64::INFINITY, f64::min);
    let mut n = reports.len();
    for (_, _, rows) in &presets.sweeps {
        for r in rows {
            worst = worst.min(r.sigma);
            n += 1;
        }
    }
    outcome(
        "second law with information",
        worst >= -1e-10,
        format!(
            "{n} points (random specs, both presets, both unitary settings), min sigma {worst:.3e}"
        ),
    )
}

/// Maximal runs of rows with `cop_ratio > 1` and `S_baths < 0`.
fn beyond_carnot_runs(rows: &[SweepRow]) -> Vec<(usize, usize)> {
    let inside = |r: &SweepRow| r.cop_ratio > 1.0 && r.s_baths < 0.0;
    let mut runs = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        if inside(&rows[i]) {
            let start = i;
            while i + 1 < rows.len() && inside(&rows[i + 1]) {
                i += 1;
            }
            runs.push((start, i));
        }
        i += 1;
    }
    runs
}

fn beyond_carnot(presets: &Presets) -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for unitary in [true, false] {
        let rows = presets.get("fig2a", unitary);
        let runs = beyond_carnot_runs(rows);
        if runs.len() != 1 {
            ok = false;
            notes.push(format!("unitary={unitary}: {} intervals", runs.len()));
            continue;
        }
        let (a, b) = runs[0];
        let flips = |i: usize| {
            let (l, r) = (&rows[i], &rows[i + 1]);
            (
                (l.s_baths < 0.0) != (r.s_baths < 0.0),
                (l.cop_ratio > 1.0) != (r.cop_ratio > 1.0),
            )
        };
        let mut edges = Vec::new();
        for (edge, interval) in [
            (a, a.checked_sub(1)),
            (b, (b + 1 < rows.len()).then_some(b)),
        ] {
            match interval {
                Some(i) => {
                    let (s, c) = flips(i);
                    ok &= s && c;
                    edges.push(format!(
                        "edge at row {edge}: S flips {s}, cop_ratio-1 flips {c} in ({:.5}, {:.5})",
                        rows[i].axis_value,
                        rows[i + 1].axis_value
                    ));
                }
                None => edges.push(format!(
                    "edge at row {edge} is the grid end theta={:.5}",
                    rows[edge].axis_value
                )),
            }
        }
        notes.push(format!(
            "unitary={unitary}: theta in [{:.5}, {:.5}]; {}",
            rows[a].axis_value,
            rows[b].axis_value,
            edges.join("; ")
        ));
    }
    outcome("beyond-Carnot region (fig2a)", ok, notes.join(" | "))
}

fn pure_information() -> Outcome {
    let omega = 0.5;
    let h = Hamiltonian::new(omega).unwrap();
    let gamma = 0.01;
    let mut ok = true;
    let mut notes = Vec::new();
    for unitary in [true, false] {
        let cold = BathSpec::new(0.1, gamma, 1.0).unwrap();
        let hot = BathSpec::new(0.2, gamma, 1.0).unwrap();
        let cold = cold.with_contact_time(30.0 / cold.decay_rate(&h)).unwrap();
        let hot = hot.with_contact_time(30.0 / hot.decay_rate(&h)).unwrap();
        let spec = CycleSpec::new(
            h,
            MeasurementBasis::new(PI, PI / 4.0).unwrap(),
            cold,
            hot,
            ChannelOptions::with_unitary(unitary),
        )
        .unwrap();
        let r = cycle_report(&spec).unwrap();
        let ratio = r.heat_cold / r.heat_hot;
        ok &= r.work.abs() <= 1e-12 * omega
            && r.heat_cold > 0.0
            && (ratio + 1.0).abs() <= 1e-10
            && r.regime == Regime::PureInformation;
        notes.push(format!(
            "unitary={unitary}: |W|={:.1e}, Qc={:.6e}, Qc/Qh+1={:.1e}, regime={}",
            r.work.abs(),
            r.heat_cold,
            ratio + 1.0,
            r.regime.as_str()
        ));
    }
    outcome("pure-information limit", ok, notes.join(" | "))
}

fn equilibrium_formulas() -> Outcome {
    // Γτ = 40: at Γτ = 30 the residual coherence e^{-Γτ/2} ≈ 3e-7 alone
    // exceeds the 1e-8 tolerance whenever sin ϑ is not small.
    let (omega, t_c, t_h, gamma) = (0.5, 0.1, 0.2, 0.01);
    let h = Hamiltonian::new(omega).unwrap();
    let n_c = 1.0 / ((omega / t_c).exp() - 1.0);
    let n_h = 1.0 / ((omega / t_h).exp() - 1.0);
    let mut worst_q = 0.0f64;
    let mut worst_ratio = 0.0f64;
    let mut ratios_checked = 0;
    for unitary in [true, false] {
        for i in 0..=20 {
            let theta = PI * i as f64 / 20.0;
            let cold = BathSpec::new(t_c, gamma, 1.0).unwrap();
            let hot = BathSpec::new(t_h, gamma, 1.0).unwrap();
            let cold = cold.with_contact_time(40.0 / cold.decay_rate(&h)).unwrap();
            let hot = hot.with_contact_time(40.0 / hot.decay_rate(&h)).unwrap();
            let spec = CycleSpec::new(
                h,
                MeasurementBasis::new(theta, 0.7).unwrap(),
                cold,
                hot,
                ChannelOptions::with_unitary(unitary),
            )
            .unwrap();
            let r = cycle_report(&spec).unwrap();
            let c = theta.cos();
            let q_pp = ((1.0 + 2.0 * n_c) - c) / (2.0 * (1.0 + 2.0 * n_c));
            let q_pm = (1.0 + 2.0 * n_h - c) / (2.0 * (1.0 + 2.0 * n_h));
            worst_q = worst_q
                .max((r.kernel.q_pp - q_pp).abs())
                .max((r.kernel.q_pm - q_pm).abs());

            let (s2, c2) = ((theta / 2.0).sin().powi(2), (theta / 2.0).cos().powi(2));
            let den = (n_c + c2) * (n_h * c - s2);
            if den.abs() > 1e-9 && r.heat_hot.abs() > 1e-12 {
                let eq = (n_h + s2) * (c2 + n_c * c) / den;
                let got = -r.heat_cold / r.heat_hot;
                worst_ratio = worst_ratio.max(((got - eq) / eq).abs());
                ratios_checked += 1;
            }
        }
    }
    outcome(
        "equilibrium kernel and heat ratio",
        worst_q <= 1e-8 && worst_ratio <= 1e-6,
        format!(
            "21 theta x 2 unitary settings at Gamma*tau=40: max |dq| {worst_q:.2e}, \
             max rel. ratio error {worst_ratio:.2e} over {ratios_checked} points"
        ),
    )
}

fn stationarity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_fixed = 0.0f64;
    let mut worst_power = 0.0f64;
    for _ in 0..100 {
        let k = TransitionKernel::from_plus_column(
            rng.random_range(0.0..1.0),
            rng.random_range(0.0..1.0),
        );
        let p = steady_p_plus(&k).unwrap();
        worst_fixed = worst_fixed.max((k.step(p) - p).abs());
        let mut q = rng.random_range(0.0..=1.0);
        for _ in 0..10_000 {
            q = k.q_pp * q + k.q_pm * (1.0 - q);
        }
        worst_power = worst_power.max((q - p).abs());
    }
    outcome(
        "stationary distribution",
        worst_fixed <= 1e-12 && worst_power <= 1e-10,
        format!("100 random kernels: fixed-point residual {worst_fixed:.1e}, power iteration {worst_power:.1e}"),
    )
}

fn limit_cycle() -> Outcome {
    let spec = SweepConfig::preset(Preset::Fig2b).base.to_spec().unwrap();
    let r = cycle_report(&spec).unwrap();
    let c = r.kernel.contraction();
    let n = ((1e-13f64).ln() / c.abs().ln()).ceil() as usize + 10;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_step = 0.0f64;
    let mut worst_final = 0.0f64;
    for _ in 0..20 {
        let rho0 = random_state(&mut rng);
        let steps = iterate_limit_cycle(&spec, &rho0, n).unwrap();
        for w in steps.windows(2) {
            let predicted = c * (w[0].p_plus - r.p_plus);
            worst_step = worst_step.max((w[1].p_plus - r.p_plus - predicted).abs());
        }
        worst_final = worst_final.max((steps[n - 1].p_plus - r.p_plus).abs());
    }
    outcome(
        "limit-cycle convergence",
        worst_step <= 1e-10 && worst_final <= 1e-10,
        format!(
            "20 random initial states, {n} cycles, ratio {c:.6}: max per-cycle deviation {worst_step:.1e}, \
             final |p - p+| {worst_final:.1e}"
        ),
    )
}

fn channel_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut ode, mut kraus, mut semi) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..200 {
        let rho = random_state(&mut rng);
        let h = Hamiltonian::new(rng.random_range(0.2..2.0)).unwrap();
        let temperature = rng.random_range(0.05..1.0);
        let coupling = log_uniform(&mut rng, 1e-3, 0.2);
        let bath = BathSpec::new(temperature, coupling, 1.0).unwrap();
        let rate = bath.decay_rate(&h);
        let t = rng.random_range(0.0..(10.0 / rate).min(100.0));
        let opts = ChannelOptions::with_unitary(rng.random_bool(0.5));
        let closed = evolve(&rho, &bath, &h, t, &opts).unwrap();
        ode = ode.max(
            evolve_ode_oracle(&rho, &bath, &h, t, &opts)
                .unwrap()
                .distance_max(&closed),
        );
        kraus = kraus.max(
            kraus_apply(&rho, &bath, &h, t, &opts)
                .unwrap()
                .distance_max(&closed),
        );
        let t1 = rng.random_range(0.0..=t);
        let mid = evolve(&rho, &bath, &h, t1, &opts).unwrap();
        semi = semi.max(
            evolve(&mid, &bath, &h, t - t1, &opts)
                .unwrap()
                .distance_max(&closed),
        );
    }
    outcome(
        "channel oracles",
        ode <= 1e-8 && kraus <= 1e-10 && semi <= 1e-10,
        format!("200 random triples: ODE {ode:.1e}, Kraus {kraus:.1e}, semigroup {semi:.1e}"),
    )
}

const REPORT_FIELDS: [&str; 14] = [
    "p_plus",
    "q_pp",
    "q_pm",
    "W",
    "Qc",
    "Qh",
    "dSm",
    "I",
    "S_baths",
    "sigma",
    "sigma_cold",
    "sigma_hot",
    "cop_carnot",
    "cop_ratio",
];

fn report_fields(r: &CycleReport) -> [f64; 14] {
    [
        r.p_plus,
        r.kernel.q_pp,
        r.kernel.q_pm,
        r.work,
        r.heat_cold,
        r.heat_hot,
        r.measurement_entropy_change,
        r.information,
        r.bath_entropy_change,
        r.entropy_production,
        r.branch_entropy_production[0],
        r.branch_entropy_production[1],
        r.cop_carnot,
        r.cop_ratio,
    ]
}

fn phi_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut worst_field = "";
    let mut worst_value = 0.0;
    let mut regimes_agree = true;
    for _ in 0..10 {
        let mut p = random_params(&mut rng);
        let mut reference: Option<CycleReport> = None;
        for phi in [0.0, PI / 4.0, PI / 2.0, 1.3] {
            p.phi = phi;
            let r = cycle_report(&p.to_spec().unwrap()).unwrap();
            match &reference {
                None => reference = Some(r),
                Some(base) => {
                    regimes_agree &= base.regime == r.regime;
                    for (j, (a, b)) in report_fields(base)
                        .iter()
                        .zip(report_fields(&r))
                        .enumerate()
                    {
                        let d = (a - b).abs();
                        if (a.is_finite() || b.is_finite()) && d > worst {
                            worst = d;
                            worst_field = REPORT_FIELDS[j];
                            worst_value = *a;
                        }
                    }
                }
            }
        }
    }
    outcome(
        "longitude invariance",
        worst <= 1e-12 && regimes_agree,
        format!(
            "10 random specs x 4 longitudes: max field difference {worst:.1e} ({worst_field} = {worst_value:.3e})"
        ),
    )
}

fn information_identity(reports: &[(BaseParams, CycleReport)], presets: &Presets) -> Outcome {
    let mut worst = reports
        .iter()
        .map(|(_, r)| (r.information + r.measurement_entropy_change).abs())
        .fold(0.0, f64::max);
    for (_, _, rows) in &presets.sweeps {
        for r in rows {
            worst = worst.max((r.information + r.d_sm).abs());
        }
    }
    outcome(
        "information identity I = -dSm",
        worst <= 1e-12,
        format!("random specs and all preset sweeps: max |I + dSm| {worst:.1e}"),
    )
}

fn cop_bound(presets: &Presets) -> Outcome {
    let mut checked = 0;
    let mut violations = 0;
    let mut worst_margin = f64::INFINITY;
    for (label, unitary, _) in &presets.sweeps {
        let preset: Preset = label.parse().unwrap();
        let mut cfg = SweepConfig::preset(preset);
        cfg.base.include_unitary = *unitary;
        for x in cfg.grid.points() {
            let spec = cfg.base.with_axis(cfg.axis, x).to_spec().unwrap();
            let r = cycle_report(&spec).unwrap();
            if let CopBound::Applicable { lhs, rhs, holds } = cop_bound_check(&r, cfg.base.t_h) {
                checked += 1;
                violations += usize::from(!holds);
                worst_margin = worst_margin.min(rhs - lhs);
            }
        }
    }
    outcome(
        "COP bound",
        checked > 0 && violations == 0,
        format!("{checked} points with W > 0 in both presets: {violations} violations, min slack {worst_margin:.3e}"),
    )
}

fn fig2b_shape(presets: &Presets) -> Outcome {
    fn shape(rows: &[SweepRow]) -> (bool, usize, usize, &[SweepRow]) {
        let s: Vec<f64> = rows.iter().map(|r| r.s_baths).collect();
        let (argmin, min) =
            s.iter()
                .copied()
                .enumerate()
                .fold(
                    (0, f64::INFINITY),
                    |acc, (i, v)| if v < acc.1 { (i, v) } else { acc },
                );
        // first local minimum: end of the initial decreasing run
        let first = s
            .windows(2)
            .position(|w| w[1] >= w[0])
            .unwrap_or(s.len() - 1);
        let interior = argmin > 0 && argmin + 1 < s.len();
        let ok = interior && first > 0 && s[s.len() - 1] > min;
        (ok, argmin, first, rows)
    }
    let (ok, argmin, first, rows) = shape(presets.get("fig2b", true));
    let (ok_off, argmin_off, _, rows_off) = shape(presets.get("fig2b", false));
    outcome(
        "fig2b interior minimum",
        ok,
        format!(
            "preset (unitary=true): S decreases to a first minimum at tau_c={:.4} ({:.3e}), \
             global minimum at tau_c={:.4} ({:.3e}); with unitary=false the shape is {} \
             (minimum at tau_c={:.4})",
            rows[first].axis_value,
            rows[first].s_baths,
            rows[argmin].axis_value,
            rows[argmin].s_baths,
            if ok_off {
                "reproduced"
            } else {
                "not reproduced"
            },
            rows_off[argmin_off].axis_value,
        ),
    )
}

fn monte_carlo() -> Outcome {
    let base = BaseParams::default();
    let specs = [
        BaseParams { theta: 2.0, ..base },
        BaseParams { tau_c: 5.0, ..base },
        BaseParams {
            omega: 0.8,
            theta: 1.1,
            phi: 2.5,
            tau_c: 20.0,
            tau_h: 3.0,
            gamma_c: 0.05,
            gamma_h: 0.02,
            t_c: 0.15,
            t_h: 0.4,
            include_unitary: false,
        },
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (i, p) in specs.iter().enumerate() {
        let spec = p.to_spec().unwrap();
        let r = cycle_report(&spec).unwrap();
        let seed = 1000 + i as u64;
        let mc = monte_carlo_oracle(&spec, 1_000_000, seed).unwrap();
        let z = |e: qmc_core::cycle::Estimate, v: f64| (e.mean - v).abs() / e.std_error;
        let zs = [
            z(mc.p_plus, r.p_plus),
            z(mc.work, r.work),
            z(mc.heat_cold, r.heat_cold),
            z(mc.heat_hot, r.heat_hot),
        ];
        let within = mc.resolved()
            && mc.p_plus.within(r.p_plus, 5.0)
            && mc.work.within(r.work, 5.0)
            && mc.heat_cold.within(r.heat_cold, 5.0)
            && mc.heat_hot.within(r.heat_hot, 5.0);
        let again = monte_carlo_oracle(&spec, 1_000_000, seed).unwrap();
        let same = format!("{mc:?}") == format!("{again:?}");
        ok &= within && same;
        notes.push(format!(
            "spec {i}: z = [{:.2}, {:.2}, {:.2}, {:.2}], reproducible {same}",
            zs[0], zs[1], zs[2], zs[3]
        ));
    }
    outcome("Monte-Carlo consistency", ok, notes.join("; "))
}

fn determinism() -> Outcome {
    let run = |jobs| {
        let mut cfg = SweepConfig::preset(Preset::Fig2a);
        cfg.jobs = Some(jobs);
        run_sweep(&cfg).unwrap().csv()
    };
    let serial = run(1);
    let again = run(1);
    let parallel = run(8);
    outcome(
        "deterministic fig2a output",
        serial == again && serial == parallel,
        format!(
            "{} bytes; repeat identical {}, jobs 1 vs 8 identical {}",
            serial.len(),
            serial == again,
            serial == parallel
        ),
    )
}

fn main() -> ExitCode {
    let started = Instant::now();
    let reports = random_reports(1000, 3);
    let presets = Presets::load();

    type Check<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);
    let checks: Vec<Check> = vec![
        ("first_law", Box::new(|| first_law(&reports))),
        ("second_law", Box::new(|| second_law(&reports, &presets))),
        ("beyond_carnot", Box::new(|| beyond_carnot(&presets))),
        ("pure_information", Box::new(pure_information)),
        ("equilibrium", Box::new(equilibrium_formulas)),
        ("stationarity", Box::new(stationarity)),
        ("limit_cycle", Box::new(limit_cycle)),
        ("channel", Box::new(channel_oracles)),
        ("phi", Box::new(phi_invariance)),
        (
            "information",
            Box::new(|| information_identity(&reports, &presets)),
        ),
        ("cop_bound", Box::new(|| cop_bound(&presets))),
        ("fig2b", Box::new(|| fig2b_shape(&presets))),
        ("monte_carlo", Box::new(monte_carlo)),
        ("determinism", Box::new(determinism)),
    ];

    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    let mut ran = 0;
    for (key, check) in &checks {
        if !filter.is_empty() && !filter.iter().any(|f| key.contains(f.as_str())) {
            continue;
        }
        let t = Instant::now();
        let o = check();
        ran += 1;
        failed += usize::from(!o.passed);
        println!(
            "{} {} ({:.2}s): {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            t.elapsed().as_secs_f64(),
            o.detail
        );
    }
    let total = started.elapsed().as_secs_f64();
    println!(
        "acceptance: {} of {ran} criteria passed in {total:.1}s (budget 120s)",
        ran - failed
    );
    if failed == 0 && total <= 120.0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
