//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! with the measured values (run with `--nocapture` to see them).
//!
//! Criterion 1 pins the historically tabulated reference pair for `bedard:5`,
//! (0.129, 2.49). A faithful evaluation of that family's formula yields
//! (0.0909, 2.536) at h = 5 — the pinned pair actually solves the h = 3
//! curve (compare `scaling-lab aoar --g bedard:3`) — so the two bedard:5
//! cells fail by construction and the test reports exactly which cells
//! differ. The closed-form/quadrature consistency of the same family is
//! covered by criterion 3, which passes.

use std::sync::LazyLock;
use std::time::{Duration, Instant};

use scaling_lab::accept::BalancingFunction;
use scaling_lab::factory::{
    die_coin_general, die_coin_r2, exact_alpha, factory_chain, two_coin, FactoryChainConfig,
    FactoryChainStats, FactoryInit, NormalFactored, PairFactored,
};
use scaling_lab::optim;
use scaling_lab::quad::{
    acceptance_rate, acceptance_rate_bedard_closed, acceptance_rate_mh_closed, odd_moment,
    odd_moment_fn, QuadratureSpec, Theta,
};
use scaling_lab::sampler::{
    acceptance_vs_dimension, finite_d_optimal, run_chain, ChainConfig, ChainStats, FiniteDResult,
    Init,
};
use scaling_lab::target::Target1D;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn theta(v: f64) -> Theta {
    Theta::new(v).unwrap()
}

fn table_set() -> Vec<BalancingFunction> {
    optim::default_table_set()
}

#[test]
fn criterion_01_table1_reproduction() {
    let start = Instant::now();
    let rows = optim::table1(&table_set());
    let elapsed = start.elapsed();

    let expect_aoar = [0.234, 0.189, 0.158, 0.129, 0.229, 0.223, 0.197, 0.158];
    let expect_l = [2.38, 2.43, 2.46, 2.49, 2.39, 2.39, 2.42, 2.46];

    let mut violations = Vec::new();
    for (i, (name, row)) in rows.iter().enumerate() {
        let opt = row.as_ref().expect("optimization succeeds");
        if (opt.aoar - expect_aoar[i]).abs() > 0.002 {
            violations.push(format!(
                "{name}: aoar {:.6} vs expected {} (tol 0.002)",
                opt.aoar, expect_aoar[i]
            ));
        }
        if (opt.l_star_sqrt_i - expect_l[i]).abs() > 0.01 {
            violations.push(format!(
                "{name}: l*sqrt(I) {:.6} vs expected {} (tol 0.01)",
                opt.l_star_sqrt_i, expect_l[i]
            ));
        }
    }
    assert!(
        elapsed < Duration::from_secs(10),
        "criterion 1 FAIL: table took {elapsed:?} (budget 10 s)"
    );
    if violations.is_empty() {
        println!("criterion 1 PASS: all 8 columns within tolerance, {elapsed:?}");
    } else {
        panic!(
            "criterion 1 FAIL ({} of 16 cells): {}",
            violations.len(),
            violations.join("; ")
        );
    }
}

#[test]
fn criterion_02_barker_optimum() {
    let opt = optim::optimize(
        &BalancingFunction::barker(),
        optim::DEFAULT_BRACKET,
        optim::DEFAULT_TOL,
    )
    .unwrap();
    assert!(
        (opt.theta_star - 6.028).abs() <= 0.01,
        "criterion 2 FAIL: theta* {} vs 6.028 +- 0.01",
        opt.theta_star
    );
    assert!(
        (opt.aoar - 0.158).abs() <= 0.002,
        "criterion 2 FAIL: aoar {} vs 0.158 +- 0.002",
        opt.aoar
    );
    let l1 = optim::optimal_l(&BalancingFunction::barker(), 1.0).unwrap();
    assert!(
        (l1 - 2.46).abs() <= 0.01,
        "criterion 2 FAIL: l*(I=1) {l1} vs 2.46 +- 0.01"
    );
    let l4 = optim::optimal_l(&BalancingFunction::barker(), 4.0).unwrap();
    assert!(
        (l4 - 2.46 / 2.0).abs() <= 0.005,
        "criterion 2 FAIL: l*(I=4) {l4} vs 1.23 +- 0.005"
    );
    println!(
        "criterion 2 PASS: theta*={:.4} aoar={:.4} l*(I=1)={:.4} l*(I=4)={:.4}",
        opt.theta_star, opt.aoar, l1, l4
    );
}

#[test]
fn criterion_03_closed_form_oracles() {
    let start = Instant::now();
    let spec = QuadratureSpec::default();
    let mut worst = 0.0_f64;
    for i in 0..50 {
        let t = 1e-3 * (1e5_f64).powf(i as f64 / 49.0);
        let q = acceptance_rate(&BalancingFunction::mh(), theta(t), &spec).unwrap();
        let c = acceptance_rate_mh_closed(theta(t));
        worst = worst.max((q - c).abs());
        assert!(
            (q - c).abs() <= 1e-8,
            "criterion 3 FAIL: mh at theta={t}: |{q} - {c}| > 1e-8"
        );
        for h in [1.0, 1.913, 5.0] {
            let g = BalancingFunction::bedard(h).unwrap();
            let q = acceptance_rate(&g, theta(t), &spec).unwrap();
            let c = acceptance_rate_bedard_closed(h, theta(t)).unwrap();
            worst = worst.max((q - c).abs());
            assert!(
                (q - c).abs() <= 1e-8,
                "criterion 3 FAIL: bedard:{h} at theta={t}: |{q} - {c}| > 1e-8"
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed < Duration::from_secs(5),
        "criterion 3 FAIL: took {elapsed:?} (budget 5 s)"
    );
    println!("criterion 3 PASS: max |quad - closed| = {worst:.2e} over 200 points, {elapsed:?}");
}

#[test]
fn criterion_04_odd_moment_property() {
    let spec = QuadratureSpec::default();
    let thetas = [0.5, 1.0, 6.028, 25.0];
    let mut worst = 0.0_f64;
    for g in table_set() {
        for &t in &thetas {
            let m = odd_moment(&g, theta(t), &spec).unwrap();
            worst = worst.max(m.abs());
            assert!(
                m.abs() <= 1e-9,
                "criterion 4 FAIL: {} at theta={t}: odd moment {m:e}",
                g.name()
            );
        }
    }
    // the deliberately unbalanced double proves the check has power
    for &t in &thetas {
        let m = odd_moment_fn(|_| 1.0, theta(t), &spec).unwrap();
        assert!(
            (m - (-t / 2.0)).abs() <= 1e-9,
            "criterion 4 FAIL: constant double at theta={t} gave {m}, expected {}",
            -t / 2.0
        );
    }
    println!("criterion 4 PASS: max |odd moment| {worst:.2e} over 8 g x 4 theta; double detected");
}

#[test]
fn criterion_05_lazy_mh() {
    let mh = optim::optimize(
        &BalancingFunction::mh(),
        optim::DEFAULT_BRACKET,
        optim::DEFAULT_TOL,
    )
    .unwrap();
    for eps in [0.1, 0.5] {
        let opt = optim::optimize(
            &BalancingFunction::lazy(eps).unwrap(),
            optim::DEFAULT_BRACKET,
            optim::DEFAULT_TOL,
        )
        .unwrap();
        assert!(
            (opt.aoar - (1.0 - eps) * 0.234).abs() <= 0.002,
            "criterion 5 FAIL: eps={eps}: aoar {} vs {}",
            opt.aoar,
            (1.0 - eps) * 0.234
        );
        assert!(
            (opt.theta_star - mh.theta_star).abs() <= 1e-3,
            "criterion 5 FAIL: eps={eps}: theta* {} vs mh {}",
            opt.theta_star,
            mh.theta_star
        );
    }
    println!("criterion 5 PASS: lazy aoar = (1-eps) x mh aoar, same theta*");
}

#[test]
fn criterion_06_efficiency_ratio() {
    let barker = optim::optimize(
        &BalancingFunction::barker(),
        optim::DEFAULT_BRACKET,
        optim::DEFAULT_TOL,
    )
    .unwrap();
    let mh = optim::optimize(
        &BalancingFunction::mh(),
        optim::DEFAULT_BRACKET,
        optim::DEFAULT_TOL,
    )
    .unwrap();
    let at_optima = barker.speed_at_opt / mh.speed_at_opt;
    assert!(
        (at_optima - 0.72).abs() <= 0.01,
        "criterion 6 FAIL: ratio at optima {at_optima} vs 0.72 +- 0.01"
    );
    let grid: Vec<f64> = (0..65)
        .map(|i| 0.01 * (1e4_f64).powf(i as f64 / 64.0))
        .collect();
    let rows = optim::efficiency_curves(
        &BalancingFunction::barker(),
        &BalancingFunction::mh(),
        &grid,
    )
    .unwrap();
    let min_ratio = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    assert!(
        min_ratio > 0.5,
        "criterion 6 FAIL: ratio dipped to {min_ratio} on [0.01, 100]"
    );
    println!(
        "criterion 6 PASS: ratio at optima {at_optima:.4}, min ratio on grid {min_ratio:.4}"
    );
}

// ---------------------------------------------------------------------------
// simulation criteria share their (expensive) computations with the
// determinism criterion through lazily-initialized payloads

const MH_LIMIT: f64 = 0.233810161; // M at the mh optimum, frozen oracle value

struct SimPayload {
    mh_d30: ChainStats,
    barker_d30: ChainStats,
    mh_sweep: Vec<(usize, f64)>,
    per_chain: Duration,
}

fn run_criterion7() -> SimPayload {
    let t0 = Instant::now();
    let mh_d30 = run_chain(&ChainConfig {
        d: 30,
        l: 2.38,
        g: BalancingFunction::mh(),
        target: Target1D::standard_normal(),
        n_iters: 2_000_000,
        burn_in: 200_000,
        seed: 2024,
        init: Init::Stationary,
    })
    .unwrap();
    let per_chain = t0.elapsed();
    let barker_d30 = run_chain(&ChainConfig {
        d: 30,
        l: 2.46,
        g: BalancingFunction::barker(),
        target: Target1D::standard_normal(),
        n_iters: 2_000_000,
        burn_in: 200_000,
        seed: 2025,
        init: Init::Stationary,
    })
    .unwrap();
    let mh_sweep: Vec<(usize, f64)> = acceptance_vs_dimension(
        &BalancingFunction::mh(),
        2.38,
        &Target1D::standard_normal(),
        &[5, 10, 30, 100],
        2_000_000,
        77,
    )
    .into_iter()
    .map(|(d, r)| (d, r.unwrap()))
    .collect();
    SimPayload {
        mh_d30,
        barker_d30,
        mh_sweep,
        per_chain,
    }
}

static C7: LazyLock<SimPayload> = LazyLock::new(run_criterion7);

#[test]
fn criterion_07_simulation_consistency() {
    let p = &*C7;
    assert!(
        p.per_chain < Duration::from_secs(120),
        "criterion 7 FAIL: a 2e6-step chain took {:?} (budget ~2 min)",
        p.per_chain
    );
    assert!(
        (p.mh_d30.accept_rate_indicator - 0.234).abs() <= 0.03,
        "criterion 7 FAIL: mh d=30 rate {} vs 0.234 +- 0.03",
        p.mh_d30.accept_rate_indicator
    );
    assert!(
        (p.barker_d30.accept_rate_indicator - 0.158).abs() <= 0.03,
        "criterion 7 FAIL: barker d=30 rate {} vs 0.158 +- 0.03",
        p.barker_d30.accept_rate_indicator
    );
    let gaps: Vec<f64> = p
        .mh_sweep
        .iter()
        .map(|(_, rate)| (rate - MH_LIMIT).abs())
        .collect();
    for w in gaps.windows(2) {
        assert!(
            w[1] <= w[0],
            "criterion 7 FAIL: |alpha_d - limit| not monotone over d: {gaps:?}"
        );
    }
    println!(
        "criterion 7 PASS: mh {:.4}, barker {:.4}, sweep gaps {:?}, {:?}/chain",
        p.mh_d30.accept_rate_indicator, p.barker_d30.accept_rate_indicator, gaps, p.per_chain
    );
}

struct FiniteDPayload {
    mh: FiniteDResult,
    barker: FiniteDResult,
}

fn run_criterion8() -> FiniteDPayload {
    let grid: Vec<f64> = (0..56).map(|i| 0.5 + 0.1 * i as f64).collect();
    let iters = 1_000_000;
    let mh = finite_d_optimal(
        &BalancingFunction::mh(),
        &Target1D::standard_normal(),
        1,
        &grid,
        iters,
        31337,
    )
    .unwrap();
    let barker = finite_d_optimal(
        &BalancingFunction::barker(),
        &Target1D::standard_normal(),
        1,
        &grid,
        iters,
        31338,
    )
    .unwrap();
    FiniteDPayload { mh, barker }
}

static C8: LazyLock<FiniteDPayload> = LazyLock::new(run_criterion8);

#[test]
fn criterion_08_finite_d_tuning() {
    let p = &*C8;
    assert!(
        !p.mh.endpoint_warning && !p.barker.endpoint_warning,
        "criterion 8 FAIL: minimizer on the grid edge"
    );
    assert!(
        (p.mh.accept_rate_at_opt - 0.43).abs() <= 0.03,
        "criterion 8 FAIL: mh d=1 optimal acceptance {} vs 0.43 +- 0.03 (l_opt {})",
        p.mh.accept_rate_at_opt,
        p.mh.l_opt
    );
    assert!(
        (p.barker.accept_rate_at_opt - 0.27).abs() <= 0.03,
        "criterion 8 FAIL: barker d=1 optimal acceptance {} vs 0.27 +- 0.03 (l_opt {})",
        p.barker.accept_rate_at_opt,
        p.barker.l_opt
    );
    println!(
        "criterion 8 PASS: mh acc {:.3} at l={:.2}; barker acc {:.3} at l={:.2}",
        p.mh.accept_rate_at_opt, p.mh.l_opt, p.barker.accept_rate_at_opt, p.barker.l_opt
    );
}

#[derive(Clone, Copy, PartialEq, Debug)]
struct Cell {
    c_x: f64,
    c_y: f64,
    p_x: f64,
    p_y: f64,
}

fn random_cells(n: usize, seed: u64) -> Vec<Cell> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = 5.0_f64.ln() - 0.2_f64.ln();
    (0..n)
        .map(|_| Cell {
            c_x: (0.2_f64.ln() + rng.random::<f64>() * span).exp(),
            c_y: (0.2_f64.ln() + rng.random::<f64>() * span).exp(),
            p_x: 0.1 + 0.9 * rng.random::<f64>(),
            p_y: 0.1 + 0.9 * rng.random::<f64>(),
        })
        .collect()
}

#[derive(PartialEq, Debug)]
struct FactoryPayload {
    /// per op: (op name, r_eff, per-cell empirical rates)
    sweeps: Vec<(&'static str, u32, Vec<f64>)>,
    two_coin_rate: f64,
    general_r1_rate: f64,
    chain_r1: FactoryChainStats,
    chain_r1_direct: ChainStats,
    chain_r2: FactoryChainStats,
    chain_r2_direct: ChainStats,
}

const CELL_TRIALS: u64 = 100_000;

fn run_criterion9() -> FactoryPayload {
    let cells = random_cells(20, 424242);
    let ops: Vec<(&'static str, u32)> = vec![
        ("two_coin", 1),
        ("die_coin_r2", 2),
        ("general_r1", 1),
        ("general_r3", 3),
        ("general_r5", 5),
    ];
    let mut sweeps = Vec::new();
    for (op_idx, (name, r)) in ops.iter().enumerate() {
        let mut rates = Vec::with_capacity(cells.len());
        for (cell_idx, cell) in cells.iter().enumerate() {
            let fd = PairFactored {
                c_x: cell.c_x,
                c_y: cell.c_y,
                p_x: cell.p_x,
                p_y: cell.p_y,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(886622);
            rng.set_stream((op_idx * 100 + cell_idx) as u64);
            let mut acc = 0_u64;
            for _ in 0..CELL_TRIALS {
                let out = match *name {
                    "two_coin" => {
                        two_coin(&fd, PairFactored::X, PairFactored::Y, &mut rng, 1 << 30)
                    }
                    "die_coin_r2" => {
                        die_coin_r2(&fd, PairFactored::X, PairFactored::Y, &mut rng, 1 << 30)
                    }
                    _ => die_coin_general(
                        *r,
                        &fd,
                        PairFactored::X,
                        PairFactored::Y,
                        &mut rng,
                        1 << 30,
                    ),
                }
                .unwrap();
                acc += out.accepted as u64;
            }
            rates.push(acc as f64 / CELL_TRIALS as f64);
        }
        sweeps.push((*name, *r, rates));
    }

    // r=1 reduction: two_coin vs die_coin_general(1) on one shared cell
    let fd = PairFactored { c_x: 0.8, c_y: 1.9, p_x: 0.55, p_y: 0.4 };
    let n = 400_000_u64;
    let mut rng = ChaCha8Rng::seed_from_u64(5150);
    let mut acc = 0_u64;
    for _ in 0..n {
        acc += two_coin(&fd, PairFactored::X, PairFactored::Y, &mut rng, 1 << 30)
            .unwrap()
            .accepted as u64;
    }
    let two_coin_rate = acc as f64 / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(5151);
    let mut acc = 0_u64;
    for _ in 0..n {
        acc += die_coin_general(1, &fd, PairFactored::X, PairFactored::Y, &mut rng, 1 << 30)
            .unwrap()
            .accepted as u64;
    }
    let general_r1_rate = acc as f64 / n as f64;

    // factory-driven chains vs direct-acceptance chains, identical protocol
    let chain = |r: u32, n: u64, max_rounds: u64, seed: u64| {
        factory_chain(
            &FactoryChainConfig {
                r,
                l: 2.46,
                n_iters: n,
                burn_in: n / 10,
                seed,
                init: FactoryInit::Stationary,
                max_rounds,
            },
            &NormalFactored,
        )
        .unwrap()
    };
    let direct = |g: BalancingFunction, n: u64, seed: u64| {
        run_chain(&ChainConfig {
            d: 1,
            l: 2.46,
            g,
            target: Target1D::standard_normal(),
            n_iters: n,
            burn_in: n / 10,
            seed,
            init: Init::Stationary,
        })
        .unwrap()
    };
    let chain_r1 = chain(1, 300_000, 10_000_000, 9001);
    let chain_r1_direct = direct(BalancingFunction::barker(), 300_000, 9101);
    let chain_r2 = chain(2, 20_000, 1_000_000_000, 9002);
    let chain_r2_direct = direct(
        BalancingFunction::generalized_barker(2).unwrap(),
        20_000,
        9102,
    );

    FactoryPayload {
        sweeps,
        two_coin_rate,
        general_r1_rate,
        chain_r1,
        chain_r1_direct,
        chain_r2,
        chain_r2_direct,
    }
}

static C9: LazyLock<FactoryPayload> = LazyLock::new(run_criterion9);

#[test]
fn criterion_09_factory_correctness() {
    let p = &*C9;
    let cells = random_cells(20, 424242);

    for (name, r, rates) in &p.sweeps {
        let mut out_of_band = 0;
        for (cell, rate) in cells.iter().zip(rates) {
            let alpha = exact_alpha(*r, cell.c_x, cell.c_y, cell.p_x, cell.p_y);
            let se = (alpha * (1.0 - alpha) / CELL_TRIALS as f64).sqrt();
            if (rate - alpha).abs() > 4.0 * se {
                out_of_band += 1;
            }
        }
        assert!(
            out_of_band <= 1,
            "criterion 9 FAIL: {name}: {out_of_band}/20 cells beyond 4 SE"
        );
    }

    // r=1 reduction consistency within 3 combined SE
    let fd_alpha = exact_alpha(1, 0.8, 1.9, 0.55, 0.4);
    let se1 = (fd_alpha * (1.0 - fd_alpha) / 400_000.0).sqrt();
    let combined = (2.0 * se1 * se1).sqrt();
    assert!(
        (p.two_coin_rate - p.general_r1_rate).abs() <= 3.0 * combined,
        "criterion 9 FAIL: two_coin {} vs general(1) {}",
        p.two_coin_rate,
        p.general_r1_rate
    );

    // factory chains match direct chains within 3 SE (2x inflation absorbs
    // the indicators' serial correlation)
    let pair_check = |label: &str, f_rate: f64, d_rate: f64, n: f64| {
        let se = 2.0 * std::f64::consts::SQRT_2 * (0.25 / n).sqrt();
        assert!(
            (f_rate - d_rate).abs() <= 3.0 * se,
            "criterion 9 FAIL: {label}: factory {f_rate} vs direct {d_rate} (3 SE = {:.4})",
            3.0 * se
        );
    };
    pair_check(
        "r=1 chain",
        p.chain_r1.accept_rate,
        p.chain_r1_direct.accept_rate_indicator,
        p.chain_r1.n_used as f64,
    );
    pair_check(
        "r=2 chain",
        p.chain_r2.accept_rate,
        p.chain_r2_direct.accept_rate_indicator,
        p.chain_r2.n_used as f64,
    );
    println!(
        "criterion 9 PASS: 5 op sweeps unbiased; reduction |{:.4}-{:.4}|; chains r1 {:.4}/{:.4}, r2 {:.4}/{:.4}",
        p.two_coin_rate,
        p.general_r1_rate,
        p.chain_r1.accept_rate,
        p.chain_r1_direct.accept_rate_indicator,
        p.chain_r2.accept_rate,
        p.chain_r2_direct.accept_rate_indicator
    );
}

#[test]
fn criterion_10_determinism() {
    // full reruns of the criterion 7-9 computations must agree bit for bit
    let c7 = &*C7;
    let again = run_criterion7();
    assert_eq!(c7.mh_d30, again.mh_d30, "criterion 10 FAIL: c7 mh chain");
    assert_eq!(
        c7.barker_d30, again.barker_d30,
        "criterion 10 FAIL: c7 barker chain"
    );
    assert_eq!(c7.mh_sweep, again.mh_sweep, "criterion 10 FAIL: c7 sweep");

    let c8 = &*C8;
    let again = run_criterion8();
    assert_eq!(c8.mh, again.mh, "criterion 10 FAIL: c8 mh");
    assert_eq!(c8.barker, again.barker, "criterion 10 FAIL: c8 barker");

    let c9 = &*C9;
    let again = run_criterion9();
    assert_eq!(*c9, again, "criterion 10 FAIL: c9 payload");

    println!("criterion 10 PASS: criteria 7-9 reruns byte-identical");
}
