//! One pipeline per subcommand, each producing a [`Report`].

use std::time::Instant;

use nbhd_core::exactlin::{rat, Rat, RatMatrix};
use num_traits::Zero;
use nbhd_core::liealgebroid as lie;
use nbhd_core::mcgauge as mc;
use nbhd_core::neighborhoods as nbh;
use nbhd_core::obstructions as obs;
use nbhd_core::resolve;
use nbhd_core::thomwhitney as tw;

use crate::report::Report;
use crate::scenario::{build_cover, build_embedding, Scenario, ScenarioError};

pub type CommandResult = Result<Report, ScenarioError>;

fn finish(mut report: Report, start: Instant) -> Report {
    report.timing_ms = Some(start.elapsed().as_millis());
    report
}

/// `resolve-check`: certify the Koszul resolution weight by weight.
pub fn resolve_check(sc: &Scenario, wmax: i64) -> CommandResult {
    let start = Instant::now();
    let k = build_embedding(sc)?;
    let mut report = Report::new("resolve-check", &sc.path);
    let res = resolve::check_resolution(&k, wmax)
        .map_err(|e| ScenarioError { line: 0, column: 0, message: e.to_string() })?;
    for row in &res.rows {
        report.push(
            format!("w{}.h0", row.weight),
            format!("{} expected {}", row.h0, row.h0_expected),
        );
        if !row.negative.is_empty() {
            let s: Vec<String> =
                row.negative.iter().map(|(d, n)| format!("H^{d}={n}")).collect();
            report.push(format!("w{}.negative", row.weight), s.join(" "));
        }
    }
    if !res.zero_components.is_empty() {
        report.push(
            "zero_components",
            res.zero_components
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(" "),
        );
    }
    report.set_status(res.pass());
    Ok(finish(report, start))
}

/// `ce-check`: truncated de Rham versus the infinitesimal neighborhoods.
pub fn ce_check(sc: &Scenario, k_max: u32, wmax: i64) -> CommandResult {
    let start = Instant::now();
    let kd = build_embedding(sc)?;
    let dr = nbh::build_de_rham(&kd);
    let mut report = Report::new("ce-check", &sc.path);
    let cartan = dr.verify_identities();
    report.push("cartan", cartan.cartan_holds);
    report.push("d_total_squared", cartan.d_total_squares_to_zero);
    let mut pass = cartan.pass();
    for order in 0..=k_max {
        let phi = nbh::verify_phi_quasi_iso(&dr, &kd, order, wmax)
            .map_err(|e| ScenarioError { line: 0, column: 0, message: e.to_string() })?;
        let ok = phi.pass();
        pass &= ok;
        report.push(format!("k{order}.total_h0"), phi.total_h0());
        report.push(format!("k{order}.quasi_iso"), ok);
    }
    report.set_status(pass);
    Ok(finish(report, start))
}

/// `selfint`: diagonal filtration of the derived self-intersection.
pub fn selfint(sc: &Scenario, k_max: u32, wmax: i64) -> CommandResult {
    let start = Instant::now();
    let kd = build_embedding(sc)?;
    let si = nbh::build_self_intersection(&kd);
    let mut report = Report::new("selfint", &sc.path);
    let res = nbh::verify_completion(&si, k_max, wmax)
        .map_err(|e| ScenarioError { line: 0, column: 0, message: e.to_string() })?;
    for (k, ok) in &res.per_order {
        report.push(format!("k{k}.agree"), ok);
    }
    match res.stable_from {
        Some(k) => report.push("stable_from", k),
        None => report.push("stable_from", "none"),
    }
    if !res.order_zero_defects.is_empty() {
        let s: Vec<String> = res
            .order_zero_defects
            .iter()
            .map(|(d, full, quot)| format!("H^{d}:{full}vs{quot}"))
            .collect();
        report.push("k0.defects", s.join(" "));
    }
    report.set_status(res.stable_from.is_some());
    Ok(finish(report, start))
}

/// `tor`: cohomology of the doubled resolution.
pub fn tor(sc: &Scenario, wmax: i64) -> CommandResult {
    let start = Instant::now();
    let kd = build_embedding(sc)?;
    let si = nbh::build_self_intersection(&kd);
    let mut report = Report::new("tor", &sc.path);
    let dims = nbh::tor_dims(&si, wmax)
        .map_err(|e| ScenarioError { line: 0, column: 0, message: e.to_string() })?;
    for (d, n) in &dims {
        report.push(format!("tor{}", -d), n);
    }
    // swap symmetry: the factor swap commutes with the differential
    let swap = si.swap_map();
    let alg = &si.algebra;
    let mut sym = true;
    for i in 0..alg.gens.len() {
        let g = alg.gen(i);
        let lhs = swap.apply(alg, &alg.apply(&si.q_total, &g));
        let rhs = alg.apply(&si.q_total, &swap.apply(alg, &g));
        sym &= lhs == rhs;
    }
    report.push("swap_symmetric", sym);
    report.set_status(sym && !dims.is_empty());
    Ok(finish(report, start))
}

/// `algebroid`: tangent complex, CE consistency, enveloping/jet checks and
/// the endomorphism complex.
pub fn algebroid(
    sc: &Scenario,
    uea_order: u32,
    jet_order: u32,
    window: i64,
) -> CommandResult {
    let start = Instant::now();
    let kd = build_embedding(sc)?;
    let mut report = Report::new("algebroid", &sc.path);
    let t = lie::build_tangent(&kd);
    let (h1, stray) = t
        .normal_bundle_check(-window, window)
        .map_err(|e| ScenarioError { line: 0, column: 0, message: e.to_string() })?;
    report.push("tangent.h1_total", h1);
    report.push("tangent.concentrated", stray.is_empty());
    let dr = nbh::build_de_rham(&kd);
    let ce_ok = lie::ce_consistency(&t, &dr, 1, 3)
        .map_err(|e| ScenarioError { line: 0, column: 0, message: e.to_string() })?;
    report.push("ce_consistent", ce_ok);
    let u = lie::build_uea(&t, uea_order);
    // associativity spot check on filtration-one generators
    let mut assoc = true;
    let gens: Vec<lie::UElement> = (0..kd.rank())
        .map(|i| u.include_tangent(&t.basis_vector(i)))
        .chain(std::iter::once(u.include_function(&kd.algebra.var(0))))
        .collect();
    for a in &gens {
        for b in &gens {
            for c in &gens {
                assoc &= u.mul(&u.mul(a, b), c) == u.mul(a, &u.mul(b, c));
            }
        }
    }
    report.push("uea.associative", assoc);
    let jets = lie::build_jets(&lie::build_uea(&t, jet_order));
    let si = nbh::build_self_intersection(&kd);
    let cmp = lie::build_jet_comparison(&si, &jets);
    let iso = cmp.verify_iso(2);
    report.push("jet_comparison_iso", iso.pass);
    let ec = lie::build_end_complex(&kd);
    let ext = ec.ext_dims(-window, window);
    let dims: Vec<String> = ext.dims.iter().map(|(d, n)| format!("{d}:{n}")).collect();
    report.push("ext_dims", dims.join(" "));
    report.push("ext_stabilized", ext.stabilized);
    let pass = stray.is_empty()
        && h1 == kd.rank()
        && ce_ok
        && assoc
        && iso.pass
        && ext.stabilized;
    report.set_status(pass);
    Ok(finish(report, start))
}

/// `tw-check`: the Thom-Whitney/totalization battery on constant and Cech
/// diagrams.
pub fn tw_check(scenario_path: &str, nerve_depth: usize, pmax: u32, window: i64) -> Report {
    let start = Instant::now();
    let mut report = Report::new("tw-check", scenario_path);
    let mut pass = true;
    // constant diagrams up to the nerve depth
    let v = nbhd_core::exactlin::SlicedComplex::new(
        0,
        vec![1, 1],
        vec![RatMatrix::zero(1, 1), RatMatrix::zero(0, 1)],
    );
    for depth in 1..=nerve_depth.min(3) {
        let diagram = tw::constant_diagram(&v, depth);
        let res = tw::verify_tw_tot(&diagram, pmax.max(depth as u32 + 1));
        pass &= res.dims_match && res.retraction_laws_hold;
        report.push(format!("constant.depth{depth}.dims_match"), res.dims_match);
        report.push(
            format!("constant.depth{depth}.retraction"),
            res.retraction_laws_hold,
        );
    }
    // Cech line bundles against the Laurent-count oracle
    use rayon::prelude::*;
    let results: Vec<(i64, bool, usize, usize)> = (-3..=3i64)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&d| {
            let diagram = tw::cech_p1_line_bundle(d, window.max(d.abs() + 1));
            let res = tw::verify_tw_tot(&diagram, pmax);
            let h0 = res.tot_dims.iter().find(|&&(g, _)| g == 0).map_or(0, |&(_, n)| n);
            let h1 = res.tot_dims.iter().find(|&&(g, _)| g == 1).map_or(0, |&(_, n)| n);
            let (e0, e1) = tw::p1_cohomology_oracle(d);
            (d, res.dims_match && res.retraction_laws_hold && (h0, h1) == (e0, e1), h0, h1)
        })
        .collect();
    for (d, ok, h0, h1) in results {
        pass &= ok;
        report.push(format!("cech.O({d})"), format!("h0={h0} h1={h1} ok={ok}"));
    }
    report.set_status(pass);
    finish(report, start)
}

/// `mc-check`: randomized gauge/BCH laws, holonomy multiplicativity, and
/// the two-chart Maurer-Cartan/cocycle correspondence.
pub fn mc_check(scenario_path: &str, instances: usize, seed: u64) -> Report {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    let start = Instant::now();
    let mut report = Report::new("mc-check", scenario_path);
    let mut rng = StdRng::seed_from_u64(seed);
    let small = |rng: &mut StdRng| -> Rat {
        nbhd_core::exactlin::ratio(rng.gen_range(-4..=4), rng.gen_range(1..=3))
    };
    let mut pass = true;
    let mut ran = 0usize;
    for c in [1u32, 2, 3] {
        let plain = mc::free_nilpotent_two(c);
        let with_d = {
            let mut xi = plain.zero();
            xi[0] = rat(1);
            mc::suspend_with_differential(&plain, &xi)
        };
        for g in [&plain, &with_d] {
            let degree0: Vec<usize> =
                (0..g.dim()).filter(|&i| g.degrees[i] == 0).collect();
            let per_algebra = instances / 6 + 1;
            for _ in 0..per_algebra {
                let pick = |rng: &mut StdRng| -> mc::Element {
                    let mut v = g.zero();
                    for &i in &degree0 {
                        v[i] = small(rng);
                    }
                    v
                };
                let a = pick(&mut rng);
                let b = pick(&mut rng);
                let c3 = pick(&mut rng);
                // group laws
                pass &= mc::NilpotentDgla::is_zero_el(&g.bch(&a, &g.bch_inverse(&a)));
                pass &= g.bch(&g.bch(&a, &b), &c3) == g.bch(&a, &g.bch(&b, &c3));
                // gauge action laws and MC preservation
                let theta = g.gauge(&a, &g.zero());
                pass &= g.is_mc(&theta);
                pass &= g.gauge(&g.zero(), &theta) == theta;
                let lhs = g.gauge(&b, &theta);
                let rhs = g.gauge(&g.bch(&b, &a), &g.zero());
                pass &= lhs == rhs;
                pass &= g.is_mc(&lhs);
                ran += 1;
            }
        }
    }
    report.push("instances", ran);
    report.push("group_and_gauge_laws", pass);
    // holonomy multiplicativity on triangle faces, randomized pure gauges
    let mut holonomy_ok = true;
    for c in [1u32, 2, 3] {
        let g = mc::free_nilpotent_two(c);
        let td = mc::TensorDgla::new(&g, 2, 6);
        for _ in 0..5 {
            let mut a = td.zero();
            for i in 0..g.dim().min(3) {
                let c1 = small(&mut rng);
                let c2 = small(&mut rng);
                a.coeffs[i] = td.forms.t(1).scale(&c1).add(
                    &td.forms.algebra.mul(&td.forms.t(2), &td.forms.t(2)).scale(&c2),
                );
            }
            let theta = td.gauge(&a, &td.zero());
            if !td.is_mc(&theta) {
                holonomy_ok = false;
                continue;
            }
            let h01 = mc::holonomy_log(&td, &theta, 0, 1);
            let h12 = mc::holonomy_log(&td, &theta, 1, 2);
            let h02 = mc::holonomy_log(&td, &theta, 0, 2);
            let c1 = g.bch(&h12, &h01);
            let c2 = g.bch(&h01, &h12);
            holonomy_ok &= c1 == h02 || c2 == h02;
        }
    }
    report.push("holonomy_multiplicative", holonomy_ok);
    pass &= holonomy_ok;
    // two-chart correspondence: abelian Cech plus a class-2 round trip
    let corr_ok = two_chart_correspondence_battery();
    report.push("two_chart_correspondence", corr_ok);
    pass &= corr_ok;
    report.set_status(pass);
    finish(report, start)
}

fn two_chart_correspondence_battery() -> bool {
    let mut ok = true;
    // abelian: orbits match additive Cech H^1 for O(-2)
    let diagram = tw::cech_p1_line_bundle(-2, 3);
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
    let tc = mc::TwoChartDgla { g0: &g0, g1: &g1, rho, p_max: 3 };
    ok &= tc.validate();
    for i in 0..g1.dim() {
        let t = g1.basis(i);
        let theta = tc.cocycle_to_mc(&t);
        ok &= tc.mc_to_cocycle(&theta) == t;
    }
    // class-2 round trip with a nontrivial gauge
    let g = mc::free_nilpotent_two(2);
    let id = RatMatrix::identity(g.dim());
    let tc2 = mc::TwoChartDgla { g0: &g, g1: &g, rho: [id.clone(), id], p_max: 4 };
    let t = vec![rat(1), rat(-1), nbhd_core::exactlin::ratio(2, 3)];
    let theta = tc2.cocycle_to_mc(&t);
    ok &= tc2.mc_to_cocycle(&theta) == t;
    let td = tc2.tensor();
    let mut u1 = td.zero();
    u1.coeffs[0] = td.forms.algebra.one();
    u1.coeffs[1] = td.forms.algebra.mul(&td.forms.t(1), &td.forms.t(1)).sub(&td.forms.t(1));
    let mut u0 = g.zero();
    u0[0] = rat(1);
    let u = mc::TwTuple { level0: u0, level1: u1 };
    let moved = tc2.gauge(&u, &theta);
    ok &= tc2.is_mc(&moved);
    ok &= tc2.gauge_connect(&moved, &theta).is_some();
    ok &= tc2.gauge_connect(&theta, &moved).is_some();
    ok
}

/// `obstruct`: the full pipeline on a cover scenario.
pub fn obstruct(sc: &Scenario, order: Option<u32>, window: i64) -> CommandResult {
    let start = Instant::now();
    let spec = build_cover(sc, order)?;
    let mut report = Report::new("obstruct", &sc.path);
    if let Err(e) = obs::verify_cocycle(&spec.cover, &spec.phi) {
        report.push("cocycle", format!("rejected: {e}"));
        report.set_status(false);
        return Ok(finish(report, start));
    }
    report.push("cocycle", "verified");
    let m = spec.cover.order;
    let split = obs::splitting_tower(&spec.cover, &spec.phi, m.saturating_sub(1), window)
        .map_err(|e| ScenarioError { line: 0, column: 0, message: e.to_string() })?;
    let mut pass = true;
    for stage in &split.stages {
        let k = stage.component;
        pass &= stage.cocycle_certified;
        report.push(format!("a{k}.cocycle"), stage.cocycle_certified);
        report.push(format!("a{k}.ext1"), stage.ext1);
        report.push(format!("a{k}.ext1_tw"), stage.ext1_tw);
        report.push(format!("a{k}.vanishes"), stage.vanishes);
        if let Some(ok) = stage.lift_verified {
            pass &= ok;
            report.push(format!("a{k}.lift"), ok);
        }
    }
    match split.blocked_at {
        Some(k) => report.push("splitting.blocked_at", format!("a{k}")),
        None => report.push("splitting.blocked_at", "none"),
    }
    if split.blocked_at.is_none() {
        let lin = obs::linearization_tower(&spec.cover, &split.gauged, m, window)
            .map_err(|e| ScenarioError { line: 0, column: 0, message: e.to_string() })?;
        for stage in &lin.stages {
            let k = stage.component;
            pass &= stage.cocycle_certified;
            report.push(format!("l{k}.cocycle"), stage.cocycle_certified);
            report.push(format!("l{k}.ext1"), stage.ext1);
        report.push(format!("l{k}.ext1_tw"), stage.ext1_tw);
            report.push(format!("l{k}.vanishes"), stage.vanishes);
            if let Some(ok) = stage.lift_verified {
                pass &= ok;
                report.push(format!("l{k}.lift"), ok);
            }
        }
        match lin.blocked_at {
            Some(k) => report.push("linearization.blocked_at", format!("l{k}")),
            None => report.push("linearization.blocked_at", "none"),
        }
    } else {
        report.push("linearization", "skipped (splitting blocked)");
    }
    // deformed Thom-Whitney resolution versus the glued algebra
    let sheaf = spec.cover.sheaf(window.max(4), window.max(4) + 2);
    let t_log = spec.phi.log(&spec.cover);
    let deform = sheaf.deform_tw(&t_log, m + 1);
    report.push("deform.h0_tw", deform.h0_tw);
    report.push("deform.h0_glued", deform.h0_glued);
    report.push("deform.stabilized", deform.stabilized);
    pass &= deform.h0_tw == deform.h0_glued && deform.stabilized;
    report.set_status(pass);
    Ok(finish(report, start))
}

/// Write the report to stdout (and optionally a file), returning the exit
/// code.
pub fn emit(report: &Report, path: Option<&str>) -> i32 {
    print!("{}", report.print());
    if let Some(p) = path {
        if let Err(e) = std::fs::write(p, report.print()) {
            eprintln!("cannot write report to `{p}`: {e}");
            return 2;
        }
    }
    report.exit_code()
}
