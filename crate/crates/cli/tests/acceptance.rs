//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line with its runtime. Every tolerance here is exact equality of
//! integers or rationals; runtime budgets are asserted too.

use std::time::{Duration, Instant};

use nbhd_cli::commands;
use nbhd_cli::scenario::Scenario;
use nbhd_core::exactlin::{rat, Rat, RatMatrix};
use nbhd_core::liealgebroid as lie;
use nbhd_core::mcgauge as mc;
use nbhd_core::neighborhoods as nbh;
use nbhd_core::obstructions as obs;
use nbhd_core::resolve;
use nbhd_core::thomwhitney as tw;
use num_traits::{One, Zero};

fn fixture(name: &str) -> String {
    format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn load(name: &str) -> Scenario {
    Scenario::load(&fixture(name)).unwrap()
}

struct Criterion {
    number: u32,
    what: &'static str,
    budget: Duration,
    start: Instant,
}

impl Criterion {
    fn begin(number: u32, what: &'static str, budget_secs: u64) -> Self {
        Criterion {
            number,
            what,
            budget: Duration::from_secs(budget_secs),
            start: Instant::now(),
        }
    }

    fn finish(self, pass: bool) {
        let elapsed = self.start.elapsed();
        let verdict = if pass && elapsed <= self.budget { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2}: {verdict} ({:>6} ms) {}",
            self.number,
            elapsed.as_millis(),
            self.what
        );
        assert!(pass, "criterion {} failed: {}", self.number, self.what);
        assert!(
            elapsed <= self.budget,
            "criterion {} exceeded its {}s budget ({} ms)",
            self.number,
            self.budget.as_secs(),
            elapsed.as_millis()
        );
    }
}

#[test]
fn criterion_01_koszul_resolution() {
    let c = Criterion::begin(1, "Koszul resolution of the point in the plane", 5);
    let k = resolve::build_koszul(
        nbhd_core::gca::BaseRing::polynomial(&[("x", 1), ("y", 1)]),
        &["x", "y"],
    )
    .unwrap();
    let report = resolve::check_resolution(&k, 6).unwrap();
    let h0: Vec<usize> = report.rows.iter().map(|r| r.h0).collect();
    let pass = h0 == vec![1, 0, 0, 0, 0, 0, 0]
        && report.rows.iter().all(|r| r.negative.is_empty())
        && report.pass();
    c.finish(pass);
}

#[test]
fn criterion_02_truncated_neighborhood_comparison() {
    let c = Criterion::begin(2, "phi^(k) quasi-isomorphisms, cumulative 1 3 6 10", 30);
    let k = resolve::build_koszul(
        nbhd_core::gca::BaseRing::polynomial(&[("x", 1), ("y", 1)]),
        &["x", "y"],
    )
    .unwrap();
    let dr = nbh::build_de_rham(&k);
    let mut totals = Vec::new();
    let mut pass = true;
    for order in 0..=3u32 {
        let report = nbh::verify_phi_quasi_iso(&dr, &k, order, 4).unwrap();
        pass &= report.pass();
        totals.push(report.total_h0());
    }
    pass &= totals == vec![1, 3, 6, 10];
    c.finish(pass);
}

#[test]
fn criterion_03_cartan_identities_on_all_fixtures() {
    let c = Criterion::begin(3, "Cartan relation and squared differentials, all fixtures", 30);
    let mut pass = true;
    for name in ["point-in-plane.scn", "point-in-line.scn", "hypersurface.scn", "nonregular.scn"]
    {
        let sc = load(name);
        let k = nbhd_cli::scenario::build_embedding(&sc).unwrap();
        let dr = nbh::build_de_rham(&k);
        let report = dr.verify_identities();
        pass &= report.cartan_holds
            && report.d_total_squares_to_zero
            && report.l_q_squares_to_zero
            && report.d_dr_squares_to_zero;
    }
    c.finish(pass);
}

#[test]
fn criterion_04_derived_self_intersection() {
    let c = Criterion::begin(4, "Tor dims (1,2,1) and completion from order 2", 30);
    let k = resolve::build_koszul(
        nbhd_core::gca::BaseRing::polynomial(&[("x", 1), ("y", 1)]),
        &["x", "y"],
    )
    .unwrap();
    let si = nbh::build_self_intersection(&k);
    let dims = nbh::tor_dims(&si, 4).unwrap();
    let mut pass = dims == vec![(-2, 1), (-1, 2), (0, 1)];
    let completion = nbh::verify_completion(&si, 3, 4).unwrap();
    pass &= completion.stable_from == Some(2);
    pass &= completion
        .per_order
        .iter()
        .all(|&(k, ok)| if k >= 2 { ok } else { true });
    c.finish(pass);
}

#[test]
fn criterion_05_jet_comparison() {
    let c = Criterion::begin(5, "jet comparison is a slice-wise isomorphism, k <= 2", 60);
    let mut pass = true;
    for section in [vec!["x"], vec!["x", "y"]] {
        let vars: Vec<(&str, i64)> = if section.len() == 1 {
            vec![("x", 1)]
        } else {
            vec![("x", 1), ("y", 1)]
        };
        let k = resolve::build_koszul(
            nbhd_core::gca::BaseRing::polynomial(&vars),
            &section,
        )
        .unwrap();
        let si = nbh::build_self_intersection(&k);
        let t = lie::build_tangent(&k);
        for order in 0..=2u32 {
            let jets = lie::build_jets(&lie::build_uea(&t, order));
            let cmp = lie::build_jet_comparison(&si, &jets);
            pass &= cmp.verify_iso(2).pass;
        }
    }
    c.finish(pass);
}

#[test]
fn criterion_06_end_complex_ext() {
    let c = Criterion::begin(6, "endomorphism complex Ext dims (1,1) and (1,2,1)", 60);
    let k1 = resolve::build_koszul(
        nbhd_core::gca::BaseRing::polynomial(&[("x", 1)]),
        &["x"],
    )
    .unwrap();
    let e1 = lie::build_end_complex(&k1).ext_dims(-3, 3);
    let k2 = resolve::build_koszul(
        nbhd_core::gca::BaseRing::polynomial(&[("x", 1), ("y", 1)]),
        &["x", "y"],
    )
    .unwrap();
    let e2 = lie::build_end_complex(&k2).ext_dims(-3, 3);
    let pass = e1.stabilized
        && e1.dims == vec![(0, 1), (1, 1)]
        && e2.stabilized
        && e2.dims == vec![(0, 1), (1, 2), (2, 1)];
    c.finish(pass);
}

#[test]
fn criterion_07_thom_whitney_vs_totalization() {
    let c = Criterion::begin(7, "TW = Tot with retraction laws, constant and O(d) diagrams", 60);
    let mut pass = true;
    // constant diagram
    let v = nbhd_core::exactlin::SlicedComplex::new(
        0,
        vec![1, 1],
        vec![RatMatrix::zero(1, 1), RatMatrix::zero(0, 1)],
    );
    let res = tw::verify_tw_tot(&tw::constant_diagram(&v, 1), 3);
    pass &= res.dims_match && res.retraction_laws_hold;
    // Cech diagrams of O(d), d in -3..=3, against the Laurent oracle
    for d in -3..=3i64 {
        let diagram = tw::cech_p1_line_bundle(d, 4);
        let res = tw::verify_tw_tot(&diagram, 2);
        let h0 = res.tot_dims.iter().find(|&&(g, _)| g == 0).map_or(0, |&(_, n)| n);
        let h1 = res.tot_dims.iter().find(|&&(g, _)| g == 1).map_or(0, |&(_, n)| n);
        pass &= res.dims_match
            && res.retraction_laws_hold
            && (h0, h1) == tw::p1_cohomology_oracle(d);
    }
    c.finish(pass);
}

#[test]
fn criterion_08_mc_gauge_laws_randomized() {
    let c = Criterion::begin(8, "gauge group laws over randomized instances, classes <= 3", 60);
    let report = commands::mc_check(&fixture("mc-battery.scn"), 60, 7);
    let instances: usize = report
        .items
        .iter()
        .find(|(k, _)| k == "instances")
        .and_then(|(_, v)| v.parse().ok())
        .unwrap_or(0);
    let pass = report.status == nbhd_cli::report::Status::Pass && instances >= 50;
    c.finish(pass);
}

#[test]
fn criterion_09_mc_cocycle_correspondence() {
    let c = Criterion::begin(9, "MC/cocycle round trips gauge-connect; abelian orbit count", 60);
    let mut pass = true;
    // abelian: orbit structure equals additive Cech H^1 for O(-3)
    let diagram = tw::cech_p1_line_bundle(-3, 3);
    let abelian = |dim: usize| mc::NilpotentDgla {
        degrees: vec![0; dim],
        filt: vec![1; dim],
        differential: vec![vec![Rat::zero(); dim]; dim],
        brackets: vec![vec![vec![Rat::zero(); dim]; dim]; dim],
        class: 1,
    };
    let g0 = abelian(diagram.levels[0].dims[0]);
    let g1 = abelian(diagram.levels[1].dims[0]);
    let rho = [
        diagram.cofaces[0][0].matrices[0].clone(),
        diagram.cofaces[0][1].matrices[0].clone(),
    ];
    let tc = mc::TwoChartDgla { g0: &g0, g1: &g1, rho: rho.clone(), p_max: 3 };
    let mut delta = RatMatrix::zero(g1.dim(), g0.dim());
    for j in 0..g0.dim() {
        for r in 0..g1.dim() {
            delta.set(r, j, rho[0].get(r, j) - rho[1].get(r, j));
        }
    }
    let h1_linear = g1.dim() - delta.rank();
    pass &= h1_linear == 2; // h^1(O(-3)) = 2
    let mut orbit_classes = 0usize;
    let mut representatives: Vec<mc::Element> = Vec::new();
    for i in 0..g1.dim() {
        let t = g1.basis(i);
        // round trip is the identity
        let theta = tc.cocycle_to_mc(&t);
        pass &= tc.mc_to_cocycle(&theta) == t;
        // count gauge orbits among basis cocycles
        let connects_zero = tc.gauge_connect(&theta, &tc.zero()).is_some();
        let is_coboundary = delta.solve(&t).is_some();
        pass &= connects_zero == is_coboundary;
        if !connects_zero {
            let mut fresh = true;
            for prev in &representatives {
                let diff = g1.sub(&t, prev);
                if delta.solve(&diff).is_some() {
                    fresh = false;
                    break;
                }
            }
            if fresh {
                representatives.push(t);
                orbit_classes += 1;
            }
        }
    }
    pass &= orbit_classes == h1_linear;
    // class-2 two-chart: round trip gauge-connects after a nontrivial move
    let g = mc::free_nilpotent_two(2);
    let id = RatMatrix::identity(g.dim());
    let tc2 = mc::TwoChartDgla { g0: &g, g1: &g, rho: [id.clone(), id], p_max: 4 };
    let t = vec![rat(2), rat(-1), nbhd_core::exactlin::ratio(1, 3)];
    let theta = tc2.cocycle_to_mc(&t);
    pass &= tc2.mc_to_cocycle(&theta) == t;
    let td = tc2.tensor();
    let mut u1 = td.zero();
    u1.coeffs[0] = td.forms.algebra.one();
    u1.coeffs[2] = td.forms.algebra.mul(&td.forms.t(1), &td.forms.t(1)).sub(&td.forms.t(1));
    let mut u0 = g.zero();
    u0[0] = Rat::one();
    let u = mc::TwTuple { level0: u0, level1: u1 };
    let moved = tc2.gauge(&u, &theta);
    pass &= tc2.is_mc(&moved);
    pass &= tc2.gauge_connect(&moved, &theta).is_some();
    c.finish(pass);
}

#[test]
fn criterion_10_deformed_resolution() {
    let c = Criterion::begin(10, "deformed TW resolution matches the glued algebra", 60);
    let mut pass = true;
    // order-2 truncation with a unipotent twist on the diagonal model
    let cover = obs::ChartCover::p1(2, (-1, -2), (-1, 2));
    let phi = obs::diagonal_cocycle(&cover);
    let t = phi.log(&cover);
    let report = cover.sheaf(6, 8).deform_tw(&t, 3);
    pass &= report.h0_tw == report.h0_glued && report.stabilized;
    // a positive-bundle variant where the section count is larger
    let cover2 = obs::ChartCover::p1(2, (1, 1), (-1, 2));
    let alg = &cover2.overlap;
    let t2 = nbhd_core::gca::Derivation::zero(alg, 0)
        .with_gen_image(0, alg.mul(&alg.var_pow(0, -1), &alg.pow(&alg.gen(0), 2)));
    let report2 = cover2.sheaf(6, 8).deform_tw(&t2, 3);
    pass &= report2.h0_tw == report2.h0_glued && report2.stabilized;
    // gauge-equivalent twists give the same dimensions
    let phi_d = obs::FilteredAutomorphism::exp(&cover2, &t2);
    let gauge = nbhd_core::gca::Derivation::zero(alg, 0)
        .with_gen_image(0, alg.mul(&alg.var(0), &alg.pow(&alg.gen(0), 2)));
    let phi_g = obs::gauge_cocycle(&cover2, &phi_d, &gauge, &nbhd_core::gca::Derivation::zero(alg, 0));
    let report3 = cover2.sheaf(6, 8).deform_tw(&phi_g.log(&cover2), 3);
    pass &= report3.h0_tw == report3.h0_glued;
    pass &= report3.h0_tw == report2.h0_tw;
    c.finish(pass);
}

#[test]
fn criterion_11_obstruction_pipeline() {
    let c = Criterion::begin(11, "splitting tower on the line and conic fixtures", 120);
    let mut pass = true;
    // line in the plane: both obstruction groups vanish, lifts verified
    let line = nbhd_cli::scenario::build_cover(&load("line-in-p2.scn"), None).unwrap();
    let split = obs::splitting_tower(&line.cover, &line.phi, 2, 8).unwrap();
    pass &= split.blocked_at.is_none();
    pass &= split.stages.len() == 2;
    pass &= split.stages[0].ext1 == 0 && split.stages[0].vanishes;
    pass &= split.stages[0].lift_verified == Some(true);
    pass &= split.stages[1].ext1 == 0 && split.stages[1].vanishes;
    pass &= split.stages[1].lift_verified == Some(true);
    pass &= split.stages.iter().all(|s| s.cocycle_certified);
    // conic: the ambient group is one-dimensional and the exact solve
    // records the verdict
    let conic = nbhd_cli::scenario::build_cover(&load("conic-in-p2.scn"), None).unwrap();
    let csplit = obs::splitting_tower(&conic.cover, &conic.phi, 2, 8).unwrap();
    pass &= csplit.stages[0].ext1 == 1;
    pass &= csplit.stages[0].cocycle_certified;
    pass &= !csplit.stages[0].vanishes && csplit.blocked_at == Some(1);
    // structure relations hold at every computed order on both fixtures
    for spec in [&line, &conic] {
        let structure = obs::linfty_from_cocycle(&spec.cover, &spec.phi).unwrap();
        pass &= obs::verify_linfty_relations(&spec.cover, &structure);
    }
    c.finish(pass);
}

#[test]
fn criterion_12_negative_controls() {
    let c = Criterion::begin(12, "corrupted cocycle and non-regular section are rejected", 30);
    let mut pass = true;
    // corrupted cocycle fails verify_cocycle with a located diagnostic
    let corrupted = nbhd_cli::scenario::build_cover(&load("corrupted-cocycle.scn"), None).unwrap();
    match obs::verify_cocycle(&corrupted.cover, &corrupted.phi) {
        Err(e) => pass &= e.to_string().contains('n'),
        Ok(()) => pass = false,
    }
    // non-regular section flags H^{-1} != 0 with the weight located
    let sc = load("nonregular.scn");
    let k = nbhd_cli::scenario::build_embedding(&sc).unwrap();
    let report = resolve::check_resolution(&k, 3).unwrap();
    pass &= !report.pass();
    pass &= report
        .rows
        .iter()
        .any(|r| r.negative.iter().any(|&(d, n)| d == -1 && n > 0));
    c.finish(pass);
}
