//! One function per subcommand. Each returns whether every output row is ok.

use std::sync::Arc;

use log::info;
use perfhom::assembly::{build_operator, DiscreteOperator};
use perfhom::complex::format_complex;
use perfhom::geometry::{strange_term, surface_area_unit_ball, BoundaryKind};
use perfhom::lab::{
    capacity_extrapolated, capacity_variational, corrector_radial, cube_sine, decomposition_inequality_check,
    interaction_sweep, log_slope, mu_percell, mu_percell_with, random_cube_source, resolvent_sweep, scaled_radius,
    DecayCheckConfig, DecayProblem, HPolicy, ResolventPair, RowStatus, Source, SweepConfig, TraceRule,
};
use perfhom::mesh::{mesh_perforated_pair, radial_grid, MeshOptions, MeshQualityReport};
use perfhom::solvers::eigs_window;
use perfhom::spectral::{
    hausdorff, numerical_range_sample, sector_angle, semigroup_decay_curve, spectral_gap_check, SectorSpec,
    SectorVariant, SpectrumWindow,
};
use perfhom::C64;

use crate::config::{Effective, SourceConfig};
use crate::output::{num, Output, Table, STATUS_FAILED};
use crate::plot::{emit_plotscript, PlotKind};
use crate::CliError;

type Outcome = Result<bool, CliError>;

const ZERO: C64 = C64::new(0.0, 0.0);

pub fn dispatch(command: &str, eff: &Effective, out: &mut Output) -> Outcome {
    match command {
        "mu" => mu(eff, out),
        "capacity" => capacity(eff, out),
        "corrector" => corrector(eff, out),
        "solve" => solve(eff, out),
        "resolvent-sweep" => sweep(eff, out),
        "spectrum" => spectrum(eff, out),
        "gap" => gap(eff, out),
        "numrange" => numrange(eff, out),
        "semigroup" => semigroup(eff, out),
        "decay" => decay(eff, out),
        "interaction" => interaction(eff, out),
        "decompose" => decompose(eff, out),
        "mesh-audit" => mesh_audit(eff, out),
        other => Err(CliError::Validation(format!("unknown subcommand `{other}`"))),
    }
}

fn core<T>(r: perfhom::Result<T>) -> Result<T, CliError> {
    r.map_err(CliError::from_core)
}

fn source(eff: &Effective) -> Source {
    match &eff.source {
        SourceConfig::Zero => Source::Zero,
        SourceConfig::SinSin => Source::SinSin,
        SourceConfig::Constant(c) => Source::Constant(c.0),
    }
}

fn c(z: C64) -> [String; 2] {
    [num(z.re), num(z.im)]
}

fn mu(eff: &Effective, out: &mut Output) -> Outcome {
    let bc = eff.boundary()?;
    let st = core(strange_term(bc, eff.dim))?;
    println!("mu = {}", format_complex(st.mu));
    let mut t = Table::new(
        "mu",
        &["bc", "dim", "epsilon", "mu_re", "mu_im", "percell_re", "percell_im", "unit_trace_re", "unit_trace_im", "exact_identity"],
    );
    let mut all_ok = true;
    let mut identity = true;
    for &eps in &eff.epsilons {
        let keys = vec![bc.name().to_string(), eff.dim.to_string(), num(eps)];
        match (mu_percell(bc, eps, eff.dim), mu_percell_with(bc, eps, eff.dim, TraceRule::Unit)) {
            (Ok(p), Ok(u)) => {
                let exact = (u - st.mu).norm() <= 4.0 * f64::EPSILON * st.mu.norm();
                identity &= exact;
                let [mr, mi] = c(st.mu);
                let [pr, pi] = c(p);
                let [ur, ui] = c(u);
                let mut row = keys;
                row.extend([mr, mi, pr, pi, ur, ui, exact.to_string()]);
                t.ok(row);
            }
            (Err(e), _) | (_, Err(e)) => {
                log::warn!("mu_percell at ε={eps}: {e}");
                all_ok = false;
                identity = false;
                t.blank(keys, STATUS_FAILED);
            }
        }
    }
    println!("exact_identity = {identity}");
    out.table(&t)?;
    Ok(all_ok)
}

fn capacity(eff: &Effective, out: &mut Output) -> Outcome {
    let d = eff.dim;
    let cap = (d as f64 - 2.0) * core(surface_area_unit_ball(d))?;
    let grid = core(radial_grid(1.0, eff.r_trunc, eff.nodes - 1, true))?;
    let energy = core(capacity_variational(d, &grid))?;
    let closed = cap / (1.0 - eff.r_trunc.powf(2.0 - d as f64));
    let ext = core(capacity_extrapolated(d, eff.r_trunc, eff.nodes))?;
    let mut t = Table::new("capacity", &["r_trunc", "nodes", "energy", "closed_form", "rel_error"]);
    t.ok(vec![num(eff.r_trunc), eff.nodes.to_string(), num(energy), num(closed), num((energy - closed).abs() / closed)]);
    t.ok(vec!["inf".into(), eff.nodes.to_string(), num(ext), num(cap), num((ext - cap).abs() / cap)]);
    println!("capacity(R={}) = {energy} (closed form {closed})", eff.r_trunc);
    println!("capacity(extrapolated) = {ext} (exact {cap}); mu_D = {}", ext / 2f64.powi(d as i32));
    out.table(&t)?;
    Ok(true)
}

fn corrector(eff: &Effective, out: &mut Output) -> Outcome {
    let bc = eff.boundary()?;
    let a = eff.inner_radius.unwrap_or_else(|| scaled_radius(bc, eff.epsilon, eff.dim, eff.neumann_exponent));
    let sol = core(corrector_radial(bc, a, eff.epsilon, eff.dim))?;
    let mut t = Table::new("corrector", &["r", "w_re", "w_im", "closed_re", "closed_im"]);
    for (r, w) in sol.grid.nodes.iter().zip(&sol.values) {
        let [wr, wi] = c(*w);
        let [cr, ci] = c(sol.closed_form(*r));
        t.ok(vec![num(*r), wr, wi, cr, ci]);
    }
    println!("a = {a}, flux = {}, max nodal error = {:e}", format_complex(sol.flux), sol.max_error());
    out.table(&t)?;
    Ok(true)
}

fn pair(eff: &Effective, domain: &perfhom::geometry::DomainSpec) -> Result<ResolventPair, CliError> {
    let spec = eff.perforation(domain, eff.epsilon)?;
    core(ResolventPair::new(&spec, eff.h_far_for(eff.epsilon), eff.grading, None, ZERO))
}

fn solve(eff: &Effective, out: &mut Output) -> Outcome {
    let p = pair(eff, &eff.domain_spec()?)?;
    let (defect, u_eps, u_lim) = core(p.defect(&source(eff)))?;
    for (name, mesh, u) in [("solve", &p.perforated, &u_eps), ("solve_limit", &p.full, &u_lim)] {
        let mut t = Table::new(name, &["x", "y", "re", "im"]);
        for (x, v) in mesh.vertices.iter().zip(u.iter()) {
            let [vr, vi] = c(*v);
            t.ok(vec![num(x[0]), num(x[1]), vr, vi]);
        }
        out.table(&t)?;
    }
    println!("dofs = {}, defect = {defect:e}", p.op_eps.n_free());
    Ok(true)
}

fn sweep(eff: &Effective, out: &mut Output) -> Outcome {
    let mut cfg = SweepConfig::new(eff.boundary()?, eff.epsilons.clone(), source(eff));
    cfg.domain = eff.domain_spec()?;
    cfg.h = match eff.h_far {
        Some(h) => HPolicy {
            h_max: h,
            ratio: f64::INFINITY,
            grading: eff.grading,
        },
        None => HPolicy {
            h_max: eff.h_max,
            ratio: eff.h_ratio,
            grading: eff.grading,
        },
    };
    cfg.radius_override = eff.radius_override;
    cfg.compute_delta = eff.compute_delta;
    cfg.compute_lambda1 = eff.compute_lambda1;
    cfg.compare_naive = eff.compare_naive;
    cfg.delta_tol = eff.delta_tol;
    cfg.seed = eff.seed;
    let rows = resolvent_sweep(&cfg);
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    let mut t = Table::new(
        "sweep",
        &["epsilon", "h_far", "dofs", "defect", "delta_eps", "lambda1_re", "lambda1_im", "status", "seconds"],
    );
    let mut details = Table::new(
        "sweep_details",
        &["epsilon", "defect_naive", "delta_iterations", "source_norm", "off_scaling"],
    );
    let mut all_ok = true;
    for r in &rows {
        let seconds = if eff.record_timing { num(r.seconds) } else { "0".into() };
        info!("ε={} status={} defect={:?} δ={:?}", r.epsilon, r.status.as_str(), r.defect, r.delta_eps);
        if r.status == RowStatus::Ok {
            t.ok(vec![
                num(r.epsilon),
                num(r.h_far),
                r.dofs.to_string(),
                opt(r.defect),
                opt(r.delta_eps),
                opt(r.lambda1.map(|z| z.re)),
                opt(r.lambda1.map(|z| z.im)),
                seconds,
            ]);
            details.ok(vec![
                num(r.epsilon),
                opt(r.defect_naive),
                r.delta_iterations.to_string(),
                num(r.source_norm),
                r.off_scaling.to_string(),
            ]);
            println!("epsilon = {}: defect = {:e}", r.epsilon, r.defect.unwrap_or(f64::NAN));
        } else {
            all_ok = false;
            log::error!("ε={}: {}", r.epsilon, r.message.as_deref().unwrap_or("failed"));
            println!("epsilon = {}: {}", r.epsilon, r.message.as_deref().unwrap_or("failed"));
            t.blank(vec![num(r.epsilon), num(r.h_far)], r.status.as_str());
            details.blank(vec![num(r.epsilon)], r.status.as_str());
        }
    }
    let path = out.table(&t)?;
    out.table(&details)?;
    emit_plotscript(&path, PlotKind::Sweep)?;
    Ok(all_ok)
}

fn operators(eff: &Effective) -> Result<(DiscreteOperator, DiscreteOperator), CliError> {
    let spec = eff.perforation(&eff.domain_spec()?, eff.epsilon)?;
    let mp = core(mesh_perforated_pair(&spec, eff.h_far_for(eff.epsilon), eff.grading, &MeshOptions::default()))?;
    let mu = core(strange_term(spec.bc, 2))?.mu;
    let op_eps = core(build_operator(Arc::new(mp.perforated), spec.bc, ZERO, ZERO))?;
    let op_lim = core(build_operator(Arc::new(mp.full), spec.bc, mu, ZERO))?;
    Ok((op_eps, op_lim))
}

fn spectrum(eff: &Effective, out: &mut Output) -> Outcome {
    let (op_eps, op_lim) = operators(eff)?;
    let window = core(SpectrumWindow::real_range(eff.window[0], eff.window[1]))?;
    let mut sets = Vec::new();
    let mut all_ok = true;
    for (name, op) in [("spectrum_eps", &op_eps), ("spectrum_limit", &op_lim)] {
        let r = core(eigs_window(op, window.x_lo, window.x_hi, 256, eff.eig_tol))?;
        all_ok &= r.converged && !r.truncated;
        let mut t = Table::new(name, &["re", "im", "residual"]);
        for p in &r.pairs {
            let [re, im] = c(p.value);
            t.ok(vec![re, im, num(p.residual)]);
        }
        let path = out.table(&t)?;
        emit_plotscript(&path, PlotKind::Spectrum)?;
        sets.push(r.values());
    }
    let dist = hausdorff(&sets[0], &sets[1]);
    let mut t = Table::new("hausdorff", &["epsilon", "x_lo", "x_hi", "distance"]);
    t.ok(vec![num(eff.epsilon), num(window.x_lo), num(window.x_hi), num(dist)]);
    out.table(&t)?;
    println!("hausdorff = {dist}");
    Ok(all_ok)
}

fn gap(eff: &Effective, out: &mut Output) -> Outcome {
    let (op_eps, _) = operators(eff)?;
    let op_b = core(op_eps.with_shift(C64::new(-1.0, 0.0)))?;
    let r = core(spectral_gap_check(&op_b, eff.delta))?;
    let mut t = Table::new("gap", &["re", "im", "in_gap"]);
    for z in &r.eigenvalues {
        let [re, im] = c(*z);
        t.ok(vec![re, im, r.witnesses.contains(z).to_string()]);
    }
    out.table(&t)?;
    println!("gap ({}, {}) holds = {}", r.interval.0, r.interval.1, r.holds);
    Ok(true)
}

fn sector_for(bc: BoundaryKind) -> Result<SectorSpec, CliError> {
    match bc {
        BoundaryKind::Robin(a) if a.re > 0.0 => core(sector_angle(a, 0.0, 2, 0.0, SectorVariant::Theta0)),
        BoundaryKind::Robin(_) => core(SectorSpec::new(ZERO, std::f64::consts::FRAC_PI_2)),
        _ => core(SectorSpec::new(ZERO, 0.0)),
    }
}

fn numrange(eff: &Effective, out: &mut Output) -> Outcome {
    let (op_eps, _) = operators(eff)?;
    let op_b = core(op_eps.with_shift(C64::new(-1.0, 0.0)))?;
    let sector = sector_for(op_b.bc_hole)?;
    let samples = core(numerical_range_sample(&op_b, eff.samples, eff.seed))?;
    let mut t = Table::new("numrange", &["re", "im", "theta", "excess"]);
    let mut violations = 0;
    for z in &samples {
        let excess = sector.excess(*z);
        if excess > 1e-12 * z.norm() {
            violations += 1;
        }
        let [re, im] = c(*z);
        t.ok(vec![re, im, num(sector.half_angle), num(excess)]);
    }
    let path = out.table(&t)?;
    emit_plotscript(&path, PlotKind::NumRange)?;
    let mut s = Table::new("sector", &["theta", "violations"]);
    s.ok(vec![num(sector.half_angle), violations.to_string()]);
    out.table(&s)?;
    println!("theta_0 = {}, violations = {violations} of {}", sector.half_angle, samples.len());
    Ok(true)
}

fn semigroup(eff: &Effective, out: &mut Output) -> Outcome {
    let (op_eps, _) = operators(eff)?;
    let op_b = core(op_eps.with_shift(C64::new(-1.0, 0.0)))?;
    let curve = core(semigroup_decay_curve(&op_b, &eff.t_grid, eff.expm_tol, eff.seed))?;
    let lambda = 0.95 * curve.spectral_abscissa;
    let mut t = Table::new("decay_curve", &["t", "norm", "bound"]);
    for p in &curve.points {
        t.ok(vec![num(p.t), num(p.norm), num(1.05 * (-lambda * p.t).exp())]);
    }
    let path = out.table(&t)?;
    emit_plotscript(&path, PlotKind::Decay)?;
    let mut f = Table::new("decay_fits", &["lambda", "m"]);
    for (l, m) in &curve.fits {
        f.ok(vec![num(*l), num(*m)]);
    }
    out.table(&f)?;
    println!("min Re sigma(B) = {}", curve.spectral_abscissa);
    Ok(true)
}

fn decay(eff: &Effective, out: &mut Output) -> Outcome {
    let strip = eff.strip_spec("decay")?;
    let cfg = core(DecayCheckConfig::new(strip.clone(), eff.lambda, eff.boundary()?))?;
    let problem = core(DecayProblem::new(&cfg))?;
    let mut t = Table::new("weighted_decay", &["seed", "cube", "r1", "r2", "m", "pass", "truncation"]);
    let mut all_ok = true;
    let mut passed = 0;
    for k in 0..eff.sources {
        let seed = eff.seed.wrapping_add(k as u64);
        let f = random_cube_source(&strip, seed);
        let cube = f.support().map(|b| b[0] as usize).unwrap_or(0);
        match problem.check(&f) {
            Ok(r) => {
                passed += r.passed() as usize;
                t.ok(vec![
                    seed.to_string(),
                    cube.to_string(),
                    num(r.r1),
                    num(r.r2),
                    num(r.m),
                    r.passed().to_string(),
                    num(r.truncation),
                ]);
            }
            Err(e) => {
                log::error!("seed {seed}: {e}");
                all_ok = false;
                t.blank(vec![seed.to_string(), cube.to_string()], STATUS_FAILED);
            }
        }
    }
    out.table(&t)?;
    println!("M = {}, passed {passed} of {}", cfg.m(), eff.sources);
    Ok(all_ok)
}

fn interaction(eff: &Effective, out: &mut Output) -> Outcome {
    let p = pair(eff, &eff.strip_spec("interaction")?)?;
    let reports = core(interaction_sweep(&p, eff.base, &eff.distances))?;
    let mut t = Table::new("interaction", &["i", "j", "distance", "inner_re", "inner_im", "ratio"]);
    for r in &reports {
        let [re, im] = c(r.inner);
        t.ok(vec![r.i.to_string(), r.j.to_string(), r.i.abs_diff(r.j).to_string(), re, im, num(r.ratio)]);
    }
    out.table(&t)?;
    println!("slope of ln|<u_i,u_j>| = {}", log_slope(&reports));
    Ok(true)
}

fn decompose(eff: &Effective, out: &mut Output) -> Outcome {
    let p = pair(eff, &eff.strip_spec("decompose")?)?;
    let pieces: Vec<Source> = eff.cubes.iter().map(|&i| cube_sine(i)).collect();
    let mut t = Table::new("decompose", &["n", "lhs", "sum_sq", "f_norm", "c"]);
    let mut cs = Vec::new();
    for n in [eff.n, eff.n + 1] {
        let r = core(decomposition_inequality_check(&p, &pieces, n))?;
        cs.push(r.c);
        t.ok(vec![n.to_string(), num(r.lhs), num(r.sum_sq), num(r.f_norm), num(r.c)]);
    }
    out.table(&t)?;
    println!("C(n={}) = {}, C(n={}) = {}", eff.n, cs[0], eff.n + 1, cs[1]);
    Ok(true)
}

fn mesh_audit(eff: &Effective, out: &mut Output) -> Outcome {
    let spec = eff.perforation(&eff.domain_spec()?, eff.epsilon)?;
    let mp = core(mesh_perforated_pair(&spec, eff.h_far_for(eff.epsilon), eff.grading, &MeshOptions::default()))?;
    let mut header = vec!["mesh"];
    header.extend(MeshQualityReport::CSV_HEADER.split(','));
    let mut t = Table::new("mesh_quality", &header);
    let mut all_ok = true;
    for (name, mesh) in [("perforated", &mp.perforated), ("full", &mp.full)] {
        match mesh.audit() {
            Ok(_) => {
                let mut row = vec![name.to_string()];
                row.extend(mesh.quality().csv_row().split(',').map(String::from));
                t.ok(row);
                println!("{name}: {}", mesh.quality());
            }
            Err(e) => {
                log::error!("{name} mesh audit: {e}");
                all_ok = false;
                t.blank(vec![name.to_string()], STATUS_FAILED);
            }
        }
    }
    out.table(&t)?;
    let mut text = Vec::new();
    core(mp.perforated.write_text(&mut text))?;
    out.text("perforated.mesh", &String::from_utf8_lossy(&text))?;
    Ok(all_ok)
}
