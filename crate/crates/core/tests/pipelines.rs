use std::path::PathBuf;

use nalgebra::Matrix2;
use twospin::analytic::{fid_sigma_t2star, pca_hahn_coherences, sample_initial_state};
use twospin::bathgen::{BathConfiguration, BathSpec, NuclearSite};
use twospin::config::RunConfig;
use twospin::fitting::fit_series;
use twospin::gcce::{exact_reference, gcce_coherence, linear_times, CoherenceSeries, GcceOptions, LevelPair, PulseSequence};
use twospin::spinham::{pair_coupling_dnm, ElectronSystem};
use twospin::{runner, Complex64 as C64, Vec3};

fn figs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../figs")
}

#[test]
fn figure_configs_round_trip() {
    let mut seen = 0;
    for entry in std::fs::read_dir(figs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        let text = std::fs::read_to_string(&path).unwrap();
        let cfg = RunConfig::from_toml(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let body: String = text
            .lines()
            .filter(|l| !l.trim_start().starts_with('#'))
            .map(|l| format!("{l}\n"))
            .collect();
        assert_eq!(cfg.to_toml(), body, "{}", path.display());
        seen += 1;
    }
    assert!(seen >= 20, "only {seen} figure configs");
}

fn scratch_config(dir: &std::path::Path) -> RunConfig {
    let mut c = RunConfig::default();
    c.bath.truncation_radius_a = 10.0;
    c.simulation.configs = 2;
    c.simulation.time_points = 21;
    c.output.dir = dir.to_path_buf();
    c
}

#[test]
fn bath_file_run_matches_exact_evolution() {
    let dir = tempfile::tempdir().unwrap();
    let sys = ElectronSystem::new(5.0, 0.0, 10e9, 1.0);
    let sites = [[6.0, 1.0, 2.0], [-3.0, 5.0, 4.5], [1.0, -6.0, -2.0]]
        .iter()
        .map(|p| NuclearSite::proton(Vec3::new(p[0], p[1], p[2])))
        .collect();
    let bath = BathConfiguration::from_sites(sites, BathSpec::default(), sys.electron_positions);
    let file = dir.path().join("bath.txt");
    std::fs::write(&file, bath.to_table()).unwrap();

    let mut cfg = scratch_config(dir.path());
    cfg.bath.file = Some(file);
    cfg.simulation.configs = 1;
    cfg.simulation.order = 3;
    cfg.simulation.pair_cutoff_a = 100.0;
    cfg.simulation.t_max_s = Some(2e-4);
    for r in runner::run(&cfg).unwrap() {
        let seq = PulseSequence::from_pulses(r.pulses).unwrap();
        let exact = exact_reference(&sys, &bath, seq, &r.ensemble.mean.times, None).unwrap();
        for pair in LevelPair::ALL {
            for (a, b) in r.ensemble.mean.pair(pair).iter().zip(exact.pair(pair)) {
                assert!((a - b).abs() < 1e-8, "N={} {pair}: {a} vs {b}", r.pulses);
            }
        }
    }
}

#[test]
fn empty_bath_keeps_full_coherence() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = scratch_config(dir.path());
    cfg.bath.density_per_a3 = 0.0;
    cfg.simulation.configs = 1;
    cfg.simulation.t_max_s = Some(1e-4);
    let files = runner::generate_baths(&cfg, dir.path()).unwrap();
    let table = std::fs::read_to_string(&files[0]).unwrap();
    assert_eq!(table.lines().count(), 2);
    assert!(table.lines().nth(1).unwrap().starts_with("x_angstrom"));

    for c in runner::compare(&cfg).unwrap() {
        for pair in LevelPair::ALL {
            assert!(c.gcce.pair(pair).iter().all(|&v| (v - 1.0).abs() < 1e-12));
            assert!(c.analytic.pair(pair).iter().all(|&v| (v - 1.0).abs() < 1e-12));
        }
    }
    // nothing decays, so every fit reports no decay
    let results = runner::run(&cfg).unwrap();
    assert!(results.iter().all(|r| r.fits.iter().all(|f| f.is_err())));
}

#[test]
fn order_one_fid_fit_recovers_gaussian_t2star() {
    // high field keeps the pseudo-secular shift of the polarized levels small
    let mut cfg = RunConfig::default();
    cfg.electrons.field_t = 10.0;
    cfg.bath.truncation_radius_a = 14.0;
    cfg.simulation.configs = 1;
    cfg.simulation.order = 1;
    cfg.simulation.time_points = 201;
    let sys = cfg.electron_system();
    let bath = runner::load_bath(&cfg, &sys, 0).unwrap();
    let (_, t2star) = fid_sigma_t2star(&sys, &bath).unwrap();
    let times = runner::time_grid(&cfg, PulseSequence::Fid).unwrap();
    let l = gcce_coherence(&sys, &bath, PulseSequence::Fid, &times, &cfg.gcce_options())
        .unwrap()
        .into_series();
    let fits = fit_series(&l, false);
    let fast = fits[LevelPair::MinusPlus.index()].as_ref().unwrap();
    assert!((1.8..=2.2).contains(&fast.b), "b = {}", fast.b);
    assert!((fast.t / t2star - 1.0).abs() < 0.05, "T = {} vs T2* = {t2star}", fast.t);
    let slow = fits[LevelPair::MinusS.index()].as_ref().unwrap();
    assert!((slow.t / (2.0 * t2star) - 1.0).abs() < 0.05);
}

/// Strongly coupled pairs near the electrons are flip-flop active in some
/// product states and frozen in others, so a 500-spin bath still leaves a
/// visible state dependence. The bound comes from a 20-seed study, whose
/// widest spread was 0.24.
#[test]
fn pca_spread_over_product_states_is_bounded() {
    let mut cfg = RunConfig::default();
    cfg.electrons.distance_a = 10.0;
    cfg.bath.truncation_radius_a = 20.8;
    let sys = cfg.electron_system();
    let bath = runner::load_bath(&cfg, &sys, 0).unwrap();
    assert!((450..=550).contains(&bath.len()));
    let times = linear_times(5e-5, 51);
    let curves: Vec<CoherenceSeries> = (1..=10)
        .map(|s| pca_hahn_coherences(&sys, &bath, &sample_initial_state(&bath, s), &times).unwrap())
        .collect();
    for pair in LevelPair::ALL {
        let mut spread = 0.0f64;
        for (i, &t) in times.iter().enumerate() {
            let v: Vec<f64> = curves.iter().map(|c| c.pair(pair)[i]).collect();
            let d = v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
            if t <= 5e-6 {
                assert!(d < 0.03, "{pair} t {t:e}: early spread {d}");
            }
            spread = spread.max(d);
        }
        if pair == LevelPair::SZero {
            assert_eq!(spread, 0.0);
        } else {
            assert!((0.05..0.3).contains(&spread), "{pair}: spread {spread}");
        }
    }
}

fn rotation(x: f64, z: f64, s: f64) -> Matrix2<C64> {
    let len = (x * x + z * z).sqrt();
    let (sin, cos) = (std::f64::consts::PI * len * s).sin_cos();
    let i = C64::new(0.0, 1.0);
    Matrix2::new(
        C64::from(cos) - i * sin * z / len,
        -i * sin * x / len,
        -i * sin * x / len,
        C64::from(cos) + i * sin * z / len,
    )
}

/// `⟨↓|U|↓⟩` of one flip-flop pair for `L_-1,0` and `L_-1,1` without bath
/// Ising fields.
fn flip_flop_amplitudes(c: f64, e: f64, tau: f64) -> [C64; 2] {
    let minus = rotation(2.0 * c, e, tau);
    let plus = rotation(2.0 * c, -e, tau);
    let zero = rotation(2.0 * c, 0.0, 2.0 * tau);
    let echo = minus * plus;
    [
        (zero.adjoint() * echo)[(1, 1)],
        (minus.adjoint() * plus.adjoint() * echo)[(1, 1)],
    ]
}

/// Order-2 gCCE on the completely mixed bath against a product over pairs of
/// the mixed-state pair echo `(2 + l(E) + l(-E)) / 4`, built from 2×2
/// pseudospin rotations. At high field the two agree.
#[test]
fn order_two_echo_is_a_mixed_state_pair_product() {
    let mut cfg = RunConfig::default();
    cfg.electrons.field_t = 30.0;
    cfg.bath.truncation_radius_a = 13.0;
    let sys = cfg.electron_system();
    let bath = runner::load_bath(&cfg, &sys, 0).unwrap();
    let times = linear_times(6e-5, 13);
    let g: CoherenceSeries = gcce_coherence(&sys, &bath, PulseSequence::Hahn, &times, &GcceOptions::default())
        .unwrap()
        .into_series();
    let a: Vec<f64> = bath.sites.iter().map(|s| sys.hyperfine_zz_sum(&s.position, s.gamma)).collect();
    let n = bath.len();
    for (i, &t) in times.iter().enumerate() {
        let mut logs = [0.0; 2];
        for p in 0..n {
            for q in p + 1..n {
                let r = bath.sites[p].position - bath.sites[q].position;
                if r.norm() > 8.0 {
                    continue;
                }
                let c = pair_coupling_dnm(&r, bath.sites[p].gamma, bath.sites[q].gamma).unwrap();
                let e = -0.5 * (a[p] - a[q]);
                let x = flip_flop_amplitudes(c, e, 0.5 * t);
                let y = flip_flop_amplitudes(c, -e, 0.5 * t);
                for k in 0..2 {
                    logs[k] += ((C64::from(2.0) + x[k] + y[k]) / 4.0).norm().ln();
                }
            }
        }
        for (k, pair) in [LevelPair::MinusZero, LevelPair::MinusPlus].into_iter().enumerate() {
            let d = (g.pair(pair)[i] - logs[k].exp()).abs();
            assert!(d < 5e-3, "{pair} t {t:e}: gCCE {} vs pair product {}", g.pair(pair)[i], logs[k].exp());
        }
    }
}

#[test]
fn sweep_rows_cover_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = scratch_config(dir.path());
    cfg.simulation.pulses = vec![0];
    cfg.simulation.order = 1;
    cfg.sweep.insert("field_t".into(), vec![1.0, 3.0]);
    cfg.sweep.insert("orientation".into(), vec![0.0, 90.0]);
    let points = runner::sweep(&cfg).unwrap();
    assert_eq!(points.len(), 4);
    let csv = runner::sweep_csv(&points);
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "param,value,pair,T_s,b,rmse,N");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4 * 6);
    assert!(rows[0].starts_with("field_t;orientation,1;0,m1_0,"));
}
