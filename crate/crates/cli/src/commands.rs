use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use semiclassical_core::diag::solve_spectrum;
use semiclassical_core::hjnd::{energy_profile, hessian_transport, minimize_action, s0_and_gradient, s1_along_flow};
use semiclassical_core::lattice_field::{self as lf, GradientMode, LatticeProblem};
use semiclassical_core::resummation::{borel_pade, pade_value};
use semiclassical_core::rspt::{format_rational, rs_series};
use semiclassical_core::*;

use crate::config::{ArithmeticSpec, Command, RunConfig, ResumMethodSpec};
use crate::error::{CliError, CliResult};
use crate::output::{Cell, Sink, Table};

/// Flags that are not part of the hashed config.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunFlags {
    /// Skip the potential hypothesis check.
    pub force: bool,
}

pub fn run(command: Command, config: &RunConfig, sink: &mut Sink, flags: RunFlags) -> CliResult<()> {
    config.check(command)?;
    match command {
        Command::Validate => validate(config, sink),
        Command::Oscillator => {
            require_valid(config, flags)?;
            if config.potential()?.dim() == 1 {
                oscillator_1d(config, sink)
            } else {
                oscillator_nd(config, sink)
            }
        }
        Command::Compare => {
            require_valid(config, flags)?;
            compare(config, sink)
        }
        Command::Resum => {
            require_valid(config, flags)?;
            resum(config, sink)
        }
        Command::Field => field(config, sink),
    }
}

fn report(config: &RunConfig) -> CliResult<ValidationReport> {
    let p = config.potential()?;
    Ok(if p.dim() == 1 {
        p.to_1d()?.validate(&config.sampling())
    } else {
        p.to_nd()?.validate(&config.sampling())
    })
}

fn require_valid(config: &RunConfig, flags: RunFlags) -> CliResult<()> {
    if flags.force {
        return Ok(());
    }
    report(config)?.into_result().map(|_| ()).map_err(|e| CliError::Validation(format!("{e} (rerun with --force to skip)")))
}

fn validate(config: &RunConfig, sink: &mut Sink) -> CliResult<()> {
    let r = report(config)?;
    let dim = config.potential()?.dim();
    let mut cols = vec!["hypothesis".to_string(), "passed".into(), "worst_value".into()];
    cols.extend((1..=dim).map(|i| format!("worst_x{i}")));
    let mut t = Table::new("validation.csv", cols);
    for c in &r.checks {
        let mut row: Vec<Cell> = vec![c.hypothesis.name().into(), c.passed.into(), c.worst_value.into()];
        row.extend((0..dim).map(|i| Cell::Float(c.worst_point.get(i).copied().unwrap_or(f64::NAN))));
        t.push(row);
    }
    sink.write(&t)?;
    r.into_result().map(|_| ()).map_err(|e| CliError::Validation(e.to_string()))
}

fn oscillator_1d(config: &RunConfig, sink: &mut Sink) -> CliResult<()> {
    let o = &config.oscillator;
    let v = config.potential()?.to_1d()?;
    let grid = Grid1D::uniform(o.half_width, o.spacing)?;
    let sol = FundamentalSolution1D::new(&v, &grid)?;
    let map = sol.sternberg()?;
    let st = HierarchyState::ground(&sol, o.order, config.hierarchy_options())?;

    let mut coeffs = Table::new("coefficients.csv", ["k", "e_k", "regularity_defect", "energy_partial_sum"]);
    for k in 0..st.e.len() {
        let defect = st.regularity_defect.get(k).copied().unwrap_or(f64::NAN);
        coeffs.push(vec![k.into(), st.e[k].into(), defect.into(), st.energy_partial_sum(o.hbar, k + 1).into()]);
    }
    sink.write(&coeffs)?;

    let mut cols: Vec<String> = ["x", "s0", "ds0", "y", "dy"].map(String::from).to_vec();
    cols.extend((1..st.a.len()).map(|k| format!("a_{k}")));
    let mut profile = Table::new("profile.csv", cols);
    for (i, &x) in grid.nodes().iter().enumerate() {
        let mut row: Vec<Cell> = vec![x.into(), sol.s0[i].into(), sol.ds0[i].into(), map.y[i].into(), map.dy[i].into()];
        row.extend(st.a[1..].iter().map(|a| Cell::Float(a[i])));
        profile.push(row);
    }
    sink.write(&profile)?;

    if !o.excited.is_empty() {
        let mut t = Table::new("excited.csv", ["quantum_number", "n", "delta_n", "energy_partial_sum"]);
        for &q in &o.excited {
            let ex = st.excited(&map, q, o.excited_order)?;
            let data = ex.excited.as_ref().expect("excited data was just built");
            for (n, d) in data.delta.iter().enumerate() {
                t.push(vec![q.into(), n.into(), (*d).into(), ex.energy_partial_sum(o.hbar, n + 1).into()]);
            }
        }
        sink.write(&t)?;
    }
    Ok(())
}

/// Configured points followed by the seeded random ones.
fn evaluation_points(config: &RunConfig, dim: usize) -> CliResult<Vec<Vec<f64>>> {
    let o = &config.oscillator;
    let mut pts = o.points.clone();
    if let Some(p) = pts.iter().find(|p| p.len() != dim) {
        return Err(CliError::Config(format!("point {p:?} does not have {dim} coordinates")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let h = config.validation.half_width;
    for _ in 0..o.random_points {
        pts.push((0..dim).map(|_| rng.random_range(-h..h)).collect());
    }
    if pts.is_empty() {
        return Err(CliError::Config("an N-D oscillator run needs oscillator.points or oscillator.random_points".into()));
    }
    Ok(pts)
}

struct PointRow {
    s0: f64,
    gradient: Vec<f64>,
    fd: Vec<f64>,
    hj: f64,
    energy: f64,
    s1: f64,
    lower: f64,
    iterations: usize,
}

fn oscillator_nd(config: &RunConfig, sink: &mut Sink) -> CliResult<()> {
    let o = &config.oscillator;
    let v = config.potential()?.to_nd()?;
    let dim = v.dim();
    let grid = match &o.time {
        Some(t) => t.build()?,
        None => TimeGrid::for_potential(&v)?,
    };
    let opts = config.trajectory_options();
    let pts = evaluation_points(config, dim)?;
    let nu = v.nu();
    let rows: Vec<CliResult<PointRow>> = pts
        .par_iter()
        .map(|x| {
            let tr = minimize_action(&v, x, &grid, &opts)?;
            let e = s0_and_gradient(&tr);
            let energy = energy_profile(&tr).iter().fold(0.0f64, |a, b| a.max(b.abs()));
            let s1 = s1_along_flow(&tr, &hessian_transport(&tr)?)?;
            let mut fd = vec![f64::NAN; dim];
            if o.fd_step > 0.0 {
                for (i, slot) in fd.iter_mut().enumerate() {
                    let (mut xp, mut xm) = (x.clone(), x.clone());
                    xp[i] += o.fd_step;
                    xm[i] -= o.fd_step;
                    let sp = minimize_action(&v, &xp, &grid, &opts)?.action;
                    let sm = minimize_action(&v, &xm, &grid, &opts)?.action;
                    *slot = (sp - sm) / (2.0 * o.fd_step);
                }
            }
            let lower = 0.5 * v.mass() * (0..dim).map(|i| nu[i] * x[i] * x[i]).sum::<f64>();
            Ok(PointRow { s0: e.s0, gradient: e.gradient, fd, hj: e.hj_residual, energy, s1, lower, iterations: tr.iterations })
        })
        .collect();

    let mut cols: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    cols.push("s0".into());
    cols.extend((1..=dim).map(|i| format!("grad{i}")));
    cols.extend((1..=dim).map(|i| format!("fd_grad{i}")));
    cols.extend(["hj_residual", "max_energy", "s1", "lower_bound", "iterations"].map(String::from));
    let mut t = Table::new("points.csv", cols);
    for (x, row) in pts.iter().zip(rows) {
        let r = row?;
        let mut cells: Vec<Cell> = x.iter().map(|v| Cell::Float(*v)).collect();
        cells.push(r.s0.into());
        cells.extend(r.gradient.iter().map(|v| Cell::Float(*v)));
        cells.extend(r.fd.iter().map(|v| Cell::Float(*v)));
        cells.extend([r.hj.into(), r.energy.into(), r.s1.into(), r.lower.into(), r.iterations.into()]);
        t.push(cells);
    }
    sink.write(&t)
}

fn series(v: &Potential1D, state: u32, order: usize, arithmetic: ArithmeticSpec) -> CliResult<PowerSeries> {
    let a = match arithmetic {
        ArithmeticSpec::Exact => Arithmetic::Exact,
        ArithmeticSpec::Float => Arithmetic::Float,
    };
    Ok(rs_series(v, state, order, a)?)
}

fn compare(config: &RunConfig, sink: &mut Sink) -> CliResult<()> {
    let c = &config.compare;
    let o = &config.oscillator;
    let v = config.potential()?.to_1d()?;
    let sol = FundamentalSolution1D::new(&v, &Grid1D::uniform(o.half_width, o.spacing)?)?;
    let st = HierarchyState::ground(&sol, c.order + 1, config.hierarchy_options())?;
    let rs = series(&v, c.state, c.order, c.arithmetic)?;
    let delta = if c.state > 0 {
        let ex = st.excited(&sol.sternberg()?, c.state, c.order)?;
        ex.excited.expect("excited data was just built").delta
    } else {
        vec![0.0; c.order + 1]
    };

    let mut t = Table::new("compare.csv", ["k", "hierarchy", "rspt", "rspt_exact", "abs_diff", "rel_diff"]);
    for k in 0..=c.order {
        let h = st.e[k] + delta[k];
        let r = rs.coeffs[k];
        let exact = rs.exact.as_ref().map(|e| format_rational(&e[k])).unwrap_or_default();
        let diff = (h - r).abs();
        let rel = if r != 0.0 { diff / r.abs() } else { f64::NAN };
        t.push(vec![k.into(), h.into(), r.into(), exact.into(), diff.into(), rel.into()]);
    }
    sink.write(&t)?;

    let p = SpectralProblem::from_potential(&v, o.hbar)?;
    let fd = solve_spectrum(&p, Method::FiniteDifference, c.fd_size, c.levels, &SpectrumOptions::default())?;
    let basis = solve_spectrum(&p, Method::HarmonicBasis, c.basis_size, c.levels, &SpectrumOptions::default())?;
    let mut s = Table::new("spectrum.csv", ["level", "fd", "fd_error", "basis", "basis_error", "abs_diff", "hierarchy_partial_sum"]);
    for n in 0..c.levels {
        let partial = if n == 0 {
            st.energy_partial_sum(o.hbar, c.order + 1)
        } else if n as u32 == c.state {
            st.excited(&sol.sternberg()?, c.state, c.order)?.energy_partial_sum(o.hbar, c.order + 1)
        } else {
            f64::NAN
        };
        s.push(vec![
            n.into(),
            fd.eigenvalues[n].into(),
            fd.error[n].into(),
            basis.eigenvalues[n].into(),
            basis.error[n].into(),
            (fd.eigenvalues[n] - basis.eigenvalues[n]).abs().into(),
            partial.into(),
        ]);
    }
    sink.write(&s)
}

fn resum(config: &RunConfig, sink: &mut Sink) -> CliResult<()> {
    let r = &config.resum;
    if r.terms == 0 {
        return Err(CliError::Config("resum.terms must be positive".into()));
    }
    let v = config.potential()?.to_1d()?;
    let s = series(&v, r.state, r.terms - 1, r.arithmetic)?;

    let mut st = Table::new("series.csv", ["k", "coefficient", "exact"]);
    for (k, c) in s.coeffs.iter().enumerate() {
        let exact = s.exact.as_ref().map(|e| format_rational(&e[k])).unwrap_or_default();
        st.push(vec![k.into(), (*c).into(), exact.into()]);
    }
    sink.write(&st)?;

    let levels = r.state as usize + 1;
    let references: Vec<CliResult<f64>> = r
        .hbar
        .par_iter()
        .map(|&h| {
            let p = SpectralProblem::from_potential(&v, h)?;
            Ok(solve_spectrum(&p, Method::FiniteDifference, r.fd_size, levels, &SpectrumOptions::default())?.eigenvalues[r.state as usize])
        })
        .collect();

    let mut t = Table::new(
        "resum.csv",
        [
            "method", "l", "m", "used_l", "used_m", "hbar", "value", "energy", "quadrature_error", "nearest_pole_deg", "reliable",
            "diag_energy", "abs_diff",
        ],
    );
    for (&h, reference) in r.hbar.iter().zip(references) {
        let reference = reference?;
        for &method in &r.methods {
            for &[l, m] in &r.approximants {
                let rep = match method {
                    ResumMethodSpec::Pade => pade_value(&s, l, m, h)?,
                    ResumMethodSpec::BorelPade => borel_pade(&s, l, m, h, &BorelOptions::default())?,
                };
                let energy = h * rep.value;
                t.push(vec![
                    rep.method.name().into(),
                    l.into(),
                    m.into(),
                    rep.used.0.into(),
                    rep.used.1.into(),
                    h.into(),
                    rep.value.into(),
                    energy.into(),
                    rep.quadrature_error.into(),
                    rep.nearest_pole_angle.to_degrees().into(),
                    rep.reliable.into(),
                    reference.into(),
                    (energy - reference).abs().into(),
                ]);
            }
        }
    }
    sink.write(&t)
}

fn site_coords(lattice: &lf::Lattice, s: usize) -> Vec<usize> {
    let n = lattice.sites_per_dim;
    (0..lattice.dim).rev().map(|k| (s / n.pow(k as u32)) % n).collect()
}

fn field(config: &RunConfig, sink: &mut Sink) -> CliResult<()> {
    let spec = config.lattice.as_ref().expect("checked by RunConfig::check");
    let lattice = spec.lattice()?;
    let grid = spec.time.build()?;
    let poly = spec.polynomial()?;
    let problem = LatticeProblem::new(lattice, grid.clone(), poly.clone(), &spec.boundary())?;
    let opts = spec.options();
    let min = lf::minimize_field(&problem, &opts)?;

    let hj = lf::hj_residual(&problem, &min);
    let energy = lf::energy_profile(&problem, &min);
    let emax = energy.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let (oracle, rel) = if poly.is_free() {
        let o = lf::free_field_action(&lattice, &grid, poly.mass(), &problem.boundary);
        (o, (min.action - o).abs() / o)
    } else {
        (f64::NAN, f64::NAN)
    };
    let bound = lf::gaussian_bound(&problem, &min, spec.coercivity)?;
    let mut summary = Table::new(
        "summary.csv",
        [
            "s0", "oracle_s0", "relative_error", "hj_residual", "max_energy", "normalized_energy", "newton_iterations", "cg_iterations",
            "line_search_halvings", "free_mass", "free_action", "gaussian_slack",
        ],
    );
    summary.push(vec![
        min.action.into(),
        oracle.into(),
        rel.into(),
        hj.residual.into(),
        emax.into(),
        (emax / (min.action / grid.horizon())).into(),
        min.newton_iterations.into(),
        min.cg_iterations.into(),
        min.line_search_halvings.into(),
        bound.free_mass.into(),
        bound.free_action.into(),
        bound.slack.into(),
    ]);
    sink.write(&summary)?;

    let grad = lf::functional_gradient(&problem, &min, GradientMode::Discrete);
    let oracle_grad = if poly.is_free() {
        lf::free_field_gradient(&lattice, &grid, poly.mass(), &problem.boundary)
    } else {
        vec![f64::NAN; grad.len()]
    };
    let mut cols: Vec<String> = vec!["site".into()];
    cols.extend((1..=lattice.dim).map(|k| format!("i{k}")));
    cols.extend(["phi", "gradient", "oracle_gradient"].map(String::from));
    let mut g = Table::new("gradient.csv", cols);
    for s in 0..lattice.sites() {
        let mut row: Vec<Cell> = vec![s.into()];
        row.extend(site_coords(&lattice, s).into_iter().map(Cell::from));
        row.extend([problem.boundary[s].into(), grad[s].into(), oracle_grad[s].into()]);
        g.push(row);
    }
    sink.write(&g)?;

    let mut e = Table::new("energy.csv", ["slice", "t", "energy"]);
    for (j, (t, en)) in grid.times().iter().zip(&energy).enumerate() {
        e.push(vec![j.into(), (*t).into(), (*en).into()]);
    }
    sink.write(&e)?;

    if spec.probes > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let sites: Vec<usize> = (0..spec.probes).map(|_| rng.random_range(0..lattice.sites())).collect();
        let fd: Vec<CliResult<f64>> = sites
            .par_iter()
            .map(|&s| Ok(lf::fd_gradient(&problem, &min, &[s], spec.probe_step, &opts)?[0]))
            .collect();
        let mut t = Table::new("probes.csv", ["site", "gradient", "fd_gradient", "rel_diff"]);
        for (&s, f) in sites.iter().zip(fd) {
            let f = f?;
            t.push(vec![s.into(), grad[s].into(), f.into(), ((grad[s] - f).abs() / grad[s].abs()).into()]);
        }
        sink.write(&t)?;
    }

    if !spec.amplitudes.is_empty() {
        let sweep = lf::virial_ratio(&problem, &spec.amplitudes, &opts)?;
        let mut t = Table::new("virial.csv", ["amplitude", "action", "r", "t", "degraded"]);
        for p in sweep {
            t.push(vec![p.amplitude.into(), p.action.into(), p.r.into(), p.t.into(), p.degraded().into()]);
        }
        sink.write(&t)?;
    }

    if spec.snapshot {
        let path = sink.dir().join("field.snap");
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        lf::write_snapshot(file, &problem, &min)?;
    }
    Ok(())
}
