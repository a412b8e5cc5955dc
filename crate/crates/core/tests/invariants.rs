use flatqst_core::dynamics::*;
use flatqst_core::effective::*;
use flatqst_core::flatband::*;
use flatqst_core::lattice::*;
use flatqst_core::realization::*;
use flatqst_core::spectral::*;
use flatqst_core::stats::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sample(n: usize, w: f64, seed: u64, index: u64) -> (ChainSpec, CouplingSet) {
    let spec = ChainSpec::new(n, 1.0, 0.01).unwrap();
    let dis = DisorderSpec::new(w, DisorderKind::Uniform, seed).unwrap();
    let c = sample_couplings(&spec, &dis, &mut dis.stream(index)).unwrap().couplings;
    (spec, c)
}

fn orthogonal(k: usize, seed: u64) -> DMatrix<f64> {
    random_orthogonal(k, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Embeds a trimer vector of cell `n` into the channel basis.
fn embed(idx: &SiteIndex, n: usize, v: [f64; 3]) -> DVector<f64> {
    let mut out = DVector::zeros(idx.dim());
    out[idx.at(Site::A(n))] = v[0];
    out[idx.at(Site::B(n))] = v[1];
    out[idx.at(Site::C(n))] = v[2];
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn transition_elements_match_sandwich(seed in any::<u64>(), w in 0.0f64..1.0, n in 2usize..12) {
        let (spec, c) = sample(n, w, seed, 0);
        let h = channel_hamiltonian(&spec, &c).unwrap();
        let idx = SiteIndex::channel(n);
        for cell in 1..n {
            let here = cell_eigenstates(c.j1[cell - 1], c.j2[cell - 1]).unwrap();
            let next = cell_eigenstates(c.j1[cell], c.j2[cell]).unwrap();
            for from in CellMode::ALL {
                for to in CellMode::ALL {
                    let ket = embed(&idx, cell, from.vector(&here));
                    let bra = embed(&idx, cell + 1, to.vector(&next));
                    let direct = (bra.transpose() * h.as_matrix() * ket)[(0, 0)];
                    let formula = intercell_transition(&c, cell, from, to).unwrap();
                    prop_assert!((direct - formula).abs() < 1e-12, "{from:?}->{to:?} {direct} {formula}");
                }
            }
        }
    }

    #[test]
    fn cell_modes_are_orthonormal(j1 in 0.01f64..10.0, j2 in 0.01f64..10.0) {
        let m = cell_eigenstates(j1, j2).unwrap();
        let dot = |a: [f64; 3], b: [f64; 3]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        prop_assert!(dot(m.zero, m.plus).abs() < 1e-14);
        prop_assert!(dot(m.zero, m.minus).abs() < 1e-14);
        prop_assert!(dot(m.plus, m.minus).abs() < 1e-14);
        for v in [m.zero, m.plus, m.minus] {
            prop_assert!((dot(v, v) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn matrices_are_symmetric_with_bipartite_blocks(seed in any::<u64>(), w in 0.0f64..1.9, n in 2usize..15) {
        let (spec, c) = sample(n, w, seed, 1);
        let h = channel_hamiltonian(&spec, &c).unwrap();
        prop_assert!(h.is_symmetric());
        prop_assert!(full_hamiltonian(&spec, &c).unwrap().is_symmetric());
        let idx = SiteIndex::channel(n);
        let b: Vec<usize> = idx.b_sites().collect();
        let ac: Vec<usize> = (0..idx.dim()).filter(|k| !b.contains(k)).collect();
        for group in [&b, &ac] {
            for &i in group.iter() {
                for &j in group.iter() {
                    prop_assert_eq!(h.get(i, j), 0.0);
                }
            }
        }
        prop_assert_eq!(channel_hamiltonian(&spec, &c).unwrap(), h);
    }

    #[test]
    fn closed_form_matches_explicit_star(
        mu in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..8),
        g in 1e-3f64..1.0,
    ) {
        // normalize so that η ≤ 1 as for a genuine projector
        let scale = mu.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt().max(1.0);
        let mu1: Vec<f64> = mu.iter().map(|p| p.0 / scale).collect();
        let mun: Vec<f64> = mu.iter().map(|p| p.1 / scale).collect();
        let eta1: f64 = mu1.iter().map(|x| x * x).sum();
        let eta_n: f64 = mun.iter().map(|x| x * x).sum();
        let lambda: f64 = mu1.iter().zip(&mun).map(|(a, b)| a * b).sum();
        prop_assume!(lambda.abs() > 1e-6);

        let summary = FlatBandSummary::from_elements(eta1, eta_n, lambda);
        let sol = solve_effective(&summary, g).unwrap();
        prop_assert!((sol.x_s.powi(2) + sol.x_r.powi(2) - 1.0).abs() < 1e-12);
        prop_assert!((sol.csr - summary.csr).abs() < 1e-10);
        prop_assert!(summary.abs_lambda() <= (eta1 * eta_n).sqrt() + 1e-15);

        let mut h = flatqst_core::matrix::HamiltonianMatrix::zeros(mu1.len() + 2);
        for k in 0..mu1.len() {
            h.set_coupling(STAR_SENDER, k + 2, g * mu1[k]);
            h.set_coupling(STAR_RECEIVER, k + 2, g * mun[k]);
        }
        let star = diagonalize_star(&h).unwrap();
        prop_assert!((star.eps1 - sol.eps1).abs() < 1e-10 * g);
        prop_assert!((star.eps2 - sol.eps2).abs() < 1e-10 * g);
        prop_assert!((star.csr - sol.csr).abs() < 1e-8);
        let e = &star.eigenvalues;
        for k in 0..e.len() {
            prop_assert!((e[k] + e[e.len() - 1 - k]).abs() < 1e-12 * g);
        }
    }

    #[test]
    fn histogram_integrates_to_one(v in prop::collection::vec(-5.0f64..5.0, 1..300), bins in 1usize..40) {
        for binning in [Binning::Auto, Binning::Count(bins)] {
            let h = make_histogram(&v, &binning).unwrap();
            prop_assert!((h.integral() - 1.0).abs() < 1e-9);
            prop_assert_eq!(h.counts.iter().sum::<u64>() as usize, v.len());
        }
    }

    #[test]
    fn fidelity_formula(a in 0.0f64..1.0) {
        let f = fidelity(num_complex::Complex64::from_polar(a, 0.3)).unwrap();
        prop_assert!((f - (0.5 + a / 3.0 + a * a / 6.0)).abs() < 1e-15);
        prop_assert!((0.5..=1.0).contains(&f));
    }
}

#[test]
fn random_frames_are_orthogonal() {
    for k in [1, 2, 10, 20] {
        let q = orthogonal(k, k as u64);
        assert!((q.transpose() * &q - DMatrix::identity(k, k)).amax() < 1e-13);
    }
}

#[test]
fn flat_band_survives_disorder() {
    for w in [0.1, 0.2, 0.4] {
        for i in 0..34 {
            let (spec, c) = sample(10, w, 99, i);
            let h = channel_hamiltonian(&spec, &c).unwrap();
            let dec = eigendecompose(&h).unwrap();
            let idx = SiteIndex::channel(10);
            let sub = channel_flat_band(&dec, &idx, ZERO_MODE_TOL).unwrap();
            assert_eq!(sub.dimension(), 10);
            assert!(sub.max_amplitude_on(idx.b_sites()) <= 1e-8);
            assert!(sub.idempotency_defect() < 1e-10);
            assert!(dec.max_residual(&h) <= 1e-10 * h.norm_inf());
            assert!(dec.orthonormality_defect() <= 1e-10);
            let e = dec.eigenvalues();
            for k in 0..e.len() {
                assert!((e[k] + e[e.len() - 1 - k]).abs() < 1e-10);
            }
            let s = summarize_flat_band(&sub, &idx);
            assert!((0.0..=1.0 + 1e-12).contains(&s.eta1));
            assert!((0.0..=1.0 + 1e-12).contains(&s.eta_n));
            assert!(s.abs_lambda() <= (s.eta1 * s.eta_n).sqrt() + 1e-12);
        }
    }
}

#[test]
fn weak_disorder_keeps_n_zero_modes() {
    for i in 0..100 {
        let w = 0.5 * ((i as f64) + 1.0) / 100.0;
        let (spec, c) = sample(10, w, 7, i);
        let dec = eigendecompose(&channel_hamiltonian(&spec, &c).unwrap()).unwrap();
        assert_eq!(zero_mode_count(&dec, ZERO_MODE_TOL), 10, "W={w}");
    }
}

#[test]
fn end_cell_compact_state_stays_in_flat_band() {
    let (spec, c) = sample(10, 0.3, 4, 0);
    let dec = eigendecompose(&channel_hamiltonian(&spec, &c).unwrap()).unwrap();
    let idx = SiteIndex::channel(10);
    let sub = channel_flat_band(&dec, &idx, ZERO_MODE_TOL).unwrap();
    let cls = cell_eigenstates(c.j1[9], c.j2[9]).unwrap().zero;
    assert!((sub.weight_of(&embed(&idx, 10, cls)) - 1.0).abs() < 1e-10);
}

#[test]
fn full_hamiltonian_has_n_minus_two_zero_modes() {
    for n in [4, 10, 20] {
        for (w, i) in [(0.0, 0), (0.1, 1), (0.2, 2), (0.4, 3)] {
            let (spec, c) = sample(n, w, 12, i);
            let dec = eigendecompose(&full_hamiltonian(&spec, &c).unwrap()).unwrap();
            assert_eq!(zero_mode_count(&dec, ZERO_MODE_TOL), n - 2, "N={n} W={w}");
        }
    }
}

#[test]
fn observables_do_not_depend_on_the_zero_mode_frame() {
    let idx = SiteIndex::channel(10);
    for (i, w) in [0.1, 0.2, 0.4].into_iter().enumerate() {
        let (spec, c) = sample(10, w, 31, i as u64);
        let dec = eigendecompose(&channel_hamiltonian(&spec, &c).unwrap()).unwrap();
        let sub = channel_flat_band(&dec, &idx, ZERO_MODE_TOL).unwrap();
        let mixed = sub.remixed(&orthogonal(sub.dimension(), 1000 + i as u64));

        let (a, b) = (summarize_flat_band(&sub, &idx), summarize_flat_band(&mixed, &idx));
        assert!((a.eta1 - b.eta1).abs() < 1e-10);
        assert!((a.eta_n - b.eta_n).abs() < 1e-10);
        assert!((a.lambda - b.lambda).abs() < 1e-10);
        assert!((a.csr - b.csr).abs() < 1e-10);

        let (sa, sb) = (solve_effective(&a, 0.01).unwrap(), solve_effective(&b, 0.01).unwrap());
        assert!((sa.eps1 - sb.eps1).abs() < 1e-10);
        assert!((sa.eps2 - sb.eps2).abs() < 1e-10);

        let ha = diagonalize_star(&effective_hamiltonian(&sub, &idx, 0.01).unwrap()).unwrap();
        let hb = diagonalize_star(&effective_hamiltonian(&mixed, &idx, 0.01).unwrap()).unwrap();
        for (x, y) in ha.eigenvalues.iter().zip(&hb.eigenvalues) {
            assert!((x - y).abs() < 1e-10);
        }
        assert!((ha.csr - hb.csr).abs() < 1e-8);
    }
}

#[test]
fn star_model_agrees_with_closed_form() {
    let g = 0.01;
    let idx = SiteIndex::channel(10);
    for w in [0.1, 0.2, 0.4] {
        for i in 0..34 {
            let (spec, c) = sample(10, w, 55, i);
            let dec = eigendecompose(&channel_hamiltonian(&spec, &c).unwrap()).unwrap();
            let sub = channel_flat_band(&dec, &idx, ZERO_MODE_TOL).unwrap();
            let summary = summarize_flat_band(&sub, &idx);
            let sol = solve_effective(&summary, g).unwrap();
            let star = diagonalize_star(&effective_hamiltonian(&sub, &idx, g).unwrap()).unwrap();

            let e = &star.eigenvalues;
            let d = e.len();
            assert!((e[d - 1] - sol.eps1).abs() < 1e-10 * g);
            assert!((e[d - 2] - sol.eps2).abs() < 1e-10 * g);
            assert!((e[0] + sol.eps1).abs() < 1e-10 * g);
            assert!((e[1] + sol.eps2).abs() < 1e-10 * g);
            let zeros = e.iter().filter(|x| x.abs() < 1e-12 * g).count();
            assert_eq!(zeros, sub.dimension() - 2);

            for wgt in star.hub_weights {
                assert!((wgt - 0.5).abs() < 1e-8);
            }
            assert!((sol.csr - summary.csr).abs() < 1e-8);
            assert!((star.csr - summary.csr).abs() < 1e-8);
            assert!((sol.x_s - star.x_s).abs() < 1e-6 && (sol.x_r - star.x_r).abs() < 1e-6);
        }
    }
}

#[test]
fn evolution_is_unitary_and_reciprocal() {
    let (spec, c) = sample(10, 0.2, 8, 0);
    let dec = eigendecompose(&full_hamiltonian(&spec, &c).unwrap()).unwrap();
    let idx = SiteIndex::full(10);
    let (s, r) = (idx.at(Site::Sender), idx.at(Site::Receiver));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let t = rng.random_range(0.0..10_000.0);
        let norm: f64 = (0..idx.dim())
            .map(|site| transition_amplitude(&dec, s, site, t).norm_sqr())
            .sum();
        assert!((norm - 1.0).abs() < 1e-10);
        let there = transition_amplitude(&dec, s, r, t).norm();
        let back = transition_amplitude(&dec, r, s, t).norm();
        assert!((there - back).abs() < 1e-12);
    }
}

#[test]
fn ordered_chain_blocks_transfer() {
    // measured: F_max − 1/2 ≈ 1.9e-4 for N = 10, g = 0.01, window 20π/g
    let spec = ChainSpec::new(10, 1.0, 0.01).unwrap();
    let r = Realization::from_couplings(&spec, CouplingSet::ordered(10, 1.0), ZERO_MODE_TOL).unwrap();
    let scan = r.scan(default_window(0.01), DEFAULT_POINTS_PER_PERIOD);
    assert!(scan.fmax < 0.55, "{}", scan.fmax);
    assert!(scan.fmax - 0.5 < 1e-3);
}

#[test]
fn perturbative_transfer_follows_envelope() {
    let spec = ChainSpec::new(10, 1.0, 0.01).unwrap();
    let dis = DisorderSpec::new(0.2, DisorderKind::Uniform, 2024).unwrap();
    let mut checked = 0;
    for i in 0..40 {
        let r = Realization::sample(&spec, &dis, i, ZERO_MODE_TOL).unwrap();
        let sol = r.solution;
        if !sol.tau.is_finite() || 2.0 * sol.tau > 4.0 * default_window(0.01) {
            continue;
        }
        let (s, rr) = r.ends();
        let grid = TimeGrid::resolving(r.full.max_abs_eigenvalue(), 2.0 * sol.tau, DEFAULT_POINTS_PER_PERIOD);
        let trace = transfer_trace(&r.full, s, rr, &sol, grid);
        for j in 0..trace.len() {
            assert!(trace.fr_abs[j] <= trace.envelope[j] + 0.05, "seed {i} t={}", trace.times[j]);
            assert!((trace.fidelity[j] - fidelity_from_abs(trace.fr_abs[j])).abs() < 1e-15);
        }
        let peak = trace.argmax_until(2.0 * sol.tau).unwrap();
        assert!((trace.fr_abs[peak] - sol.csr).abs() < 0.05, "seed {i}");
        if sol.csr > 0.8 {
            assert!((trace.times[peak] - sol.tau).abs() < 0.1 * sol.tau, "seed {i}");
        }
        checked += 1;
    }
    assert!(checked >= 20);
}

#[test]
fn full_spectrum_tracks_effective_model() {
    let spec = ChainSpec::new(10, 1.0, 0.01).unwrap();
    let dis = DisorderSpec::new(0.2, DisorderKind::Uniform, 77).unwrap();
    for i in 0..20 {
        let r = Realization::sample(&spec, &dis, i, ZERO_MODE_TOL).unwrap();
        let d = r.doublets.unwrap();
        assert!((d.eps1 - r.solution.eps1).abs() < 0.01 * r.solution.eps1);
        assert!((d.csr - r.summary.csr).abs() < 0.05);
    }
}

#[test]
fn finite_coupling_correlation_fades_at_tiny_disorder() {
    // measured means for N = 10, 100 samples: 0.551 (W=1e-2), 0.552 (1e-3), 0.281 (1e-4)
    let spec = ChainSpec::new(10, 1.0, 0.01).unwrap();
    let opts = RunOptions {
        scan_fidelity: false,
        ..RunOptions::default()
    };
    let mean_full = |w: f64| {
        let dis = DisorderSpec::new(w, DisorderKind::Uniform, 2024).unwrap();
        moments((0..100).map(|i| run_realization(&spec, &dis, i, &opts).csr_full)).unwrap().mean
    };
    let (a, b, c) = (mean_full(1e-2), mean_full(1e-3), mean_full(1e-4));
    assert!((a - b).abs() < 0.05, "{a} {b}");
    assert!(c < b - 0.15 && c < 0.4, "{b} {c}");
}

#[test]
fn strongly_unbalanced_hubs_stay_normalized() {
    // ε̃₁² − η_N ≈ 4e-8 ≪ |Λ|: the hub vector is almost entirely on R
    let summary = FlatBandSummary::from_elements(0.356_682_100_769_843_97, 0.643_317_899_230_156, -1.062_356_954_442_816_9e-4);
    let sol = solve_effective(&summary, 1e-3).unwrap();
    assert!((sol.x_s.powi(2) + sol.x_r.powi(2) - 1.0).abs() < 1e-15);
    assert!((sol.csr - summary.csr).abs() < 1e-12);
    let (xs, xr) = hub_amplitudes_numeric(summary.eta1, summary.eta_n, summary.lambda);
    assert!((sol.x_s - xs).abs() < 1e-10 && (sol.x_r - xr).abs() < 1e-10);
}
