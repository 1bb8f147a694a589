//! Orchestration: build mesh → solve P1 → π_h → RT0 → constants → weight →
//! estimator, and the file outputs (report.txt, table.csv, band.dat).

use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{Context, Result};
use rayon::prelude::*;

use hypercircle::conforming::{
    constant_gradient, sine_exact_gradient, sine_source, solve_p1, zero_fn, P1Field, ProblemSpec,
    ScalarFn,
};
use hypercircle::constants::{compute_bundle, ConstantsBundle, CpProvenance, PoincareMode};
use hypercircle::estimator::{local_bound, EstimateReport, Timings};
use hypercircle::mesh::{BoundaryLabel, Mesh};
use hypercircle::mixed::{project_pi_h, solve_rt0, PwConstField, RT0Field};
use hypercircle::weight::{build_product_weight, GradNormConvention};

use crate::config::{BoundarySetup, DirichletData, Domain, PoincareChoice, RunConfig, Source};

pub fn build_mesh(cfg: &RunConfig, n: u32) -> Result<Mesh> {
    let mut mesh = match cfg.domain {
        Domain::UnitSquare => Mesh::uniform_rect((0.0, 1.0), (0.0, 1.0), n)?,
        Domain::LShape => Mesh::uniform_lshape(n)?,
        Domain::Rect { x0, x1, y0, y1 } => Mesh::uniform_rect((x0, x1), (y0, y1), n)?,
    };
    match cfg.boundary {
        BoundarySetup::Dirichlet => {}
        BoundarySetup::PureNeumann => mesh.label_boundary(|_| BoundaryLabel::Neumann),
        BoundarySetup::Mixed { left, right, bottom, top } => {
            let b = mesh.domain.bounds;
            let tol = 1e-9 * b.width().max(b.height());
            mesh.label_boundary(move |mid| {
                let neumann = (left && (mid.x - b.x0).abs() < tol)
                    || (right && (mid.x - b.x1).abs() < tol)
                    || (bottom && (mid.y - b.y0).abs() < tol)
                    || (top && (mid.y - b.y1).abs() < tol);
                if neumann {
                    BoundaryLabel::Neumann
                } else {
                    BoundaryLabel::Dirichlet
                }
            });
        }
    }
    Ok(mesh)
}

fn problem_for(cfg: &RunConfig, mesh: Arc<Mesh>) -> ProblemSpec {
    let source: Arc<ScalarFn> = match cfg.source {
        Source::Sine => sine_source(),
        Source::Zero => zero_fn(),
    };
    let mut ps = ProblemSpec::new(mesh, source);
    match cfg.dirichlet_data {
        DirichletData::Zero => {}
        DirichletData::Linear => {
            ps = ps.with_dirichlet_data(Arc::new(|x, y| x + y));
        }
    }
    // exact gradients where the solution is known in closed form
    match (cfg.source, cfg.dirichlet_data, &cfg.domain, cfg.boundary) {
        (Source::Sine, DirichletData::Zero, Domain::UnitSquare, BoundarySetup::Dirichlet) => {
            ps = ps.with_exact_gradient(sine_exact_gradient());
        }
        (Source::Zero, DirichletData::Linear, _, BoundarySetup::Dirichlet) => {
            ps = ps.with_exact_gradient(constant_gradient(1.0, 1.0));
        }
        (Source::Zero, DirichletData::Zero, _, BoundarySetup::Dirichlet) => {
            ps = ps.with_exact_gradient(constant_gradient(0.0, 0.0));
        }
        _ => {}
    }
    ps
}

fn poincare_mode(cfg: &RunConfig, ps: &ProblemSpec) -> PoincareMode {
    match cfg.poincare {
        PoincareChoice::Exact => PoincareMode::ExactUnitSquare,
        PoincareChoice::CrBound => PoincareMode::CrBound,
        PoincareChoice::Auto => {
            let b = &ps.mesh.domain.bounds;
            let unit_square = ps.mesh.domain.cutout.is_none()
                && (b.x1 - b.x0 - 1.0).abs() < 1e-12
                && (b.y1 - b.y0 - 1.0).abs() < 1e-12;
            let full_dirichlet = matches!(cfg.boundary, BoundarySetup::Dirichlet);
            if unit_square && full_dirichlet {
                PoincareMode::ExactUnitSquare
            } else {
                PoincareMode::CrBound
            }
        }
    }
}

/// Everything of a case that does not depend on the band width.
pub struct CaseSetup {
    pub n: u32,
    pub ps: ProblemSpec,
    pub u: P1Field,
    pub pi_f: PwConstField,
    pub p: RT0Field,
    pub constants: ConstantsBundle,
    pub timings: Timings,
}

pub fn prepare_case(cfg: &RunConfig, n: u32) -> Result<CaseSetup> {
    let total = Instant::now();
    let mesh = Arc::new(build_mesh(cfg, n)?);
    let ps = problem_for(cfg, mesh);

    let t0 = Instant::now();
    let u = solve_p1(&ps, &*ps.source.clone())?;
    let t_p1 = t0.elapsed();

    let t0 = Instant::now();
    let pi_f = project_pi_h(&*ps.source.clone(), &ps.mesh, ps.pure_neumann());
    let (p, _mu) = solve_rt0(&ps, &pi_f)?;
    let t_rt0 = t0.elapsed();

    let t0 = Instant::now();
    let constants = compute_bundle(&ps, poincare_mode(cfg, &ps))?;
    let t_const = t0.elapsed();

    Ok(CaseSetup {
        n,
        ps,
        u,
        pi_f,
        p,
        constants,
        timings: Timings {
            solve_conforming: t_p1,
            solve_mixed: t_rt0,
            constants: t_const,
            estimate: Default::default(),
            total: total.elapsed(),
        },
    })
}

pub fn estimate_with(
    setup: &CaseSetup,
    s: hypercircle::geometry::Rect,
    eps: f64,
    convention: GradNormConvention,
) -> Result<EstimateReport> {
    let t0 = Instant::now();
    let w = build_product_weight(s, eps, &setup.ps.mesh.domain)?;
    let mut report = local_bound(
        &setup.ps,
        &setup.u,
        &setup.p,
        &setup.pi_f,
        &w,
        &setup.constants,
        convention,
    )?;
    report.n = Some(setup.n);
    report.timings = setup.timings;
    report.timings.estimate = t0.elapsed();
    report.timings.total += t0.elapsed();
    Ok(report)
}

/// Numbers are printed with 6 significant digits, '.' decimal separator.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    let decimals = (5 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

fn opt_sig(v: Option<f64>) -> String {
    v.map(fmt_sig).unwrap_or_default()
}

pub const MESH_TABLE_HEADER: &str =
    "n,h,kappa_h,c_of_h,local_bound,err1,err2,err3,exact_local,global_bound";

pub fn mesh_table_row(r: &EstimateReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        r.n.map(|n| n.to_string()).unwrap_or_default(),
        fmt_sig(r.h),
        fmt_sig(r.constants.kappa.guaranteed),
        fmt_sig(r.constants.c_of_h),
        fmt_sig(r.local_bound),
        fmt_sig(r.err1),
        fmt_sig(r.err2),
        fmt_sig(r.err3),
        opt_sig(r.exact_local),
        fmt_sig(r.global_bound),
    )
}

pub const BAND_TABLE_HEADER: &str = "eps,err1,err2,err3,local_bound";

pub fn band_table_row(r: &EstimateReport) -> String {
    format!(
        "{},{},{},{},{}",
        fmt_sig(r.eps),
        fmt_sig(r.err1),
        fmt_sig(r.err2),
        fmt_sig(r.err3),
        fmt_sig(r.local_bound),
    )
}

pub fn write_report(r: &EstimateReport, cfg: &RunConfig, path: &Path) -> Result<()> {
    let mut s = String::new();
    let domain = match &cfg.domain {
        Domain::UnitSquare => "unit_square".to_string(),
        Domain::LShape => "l_shape".to_string(),
        Domain::Rect { x0, x1, y0, y1 } => format!("rect {x0} {x1} {y0} {y1}"),
    };
    s.push_str(&format!("domain = {domain}\n"));
    if let Some(n) = r.n {
        s.push_str(&format!("n = {n}\n"));
        s.push_str(&format!("inv_n = {}\n", fmt_sig(1.0 / n as f64)));
    }
    s.push_str(&format!("h = {}\n", fmt_sig(r.h)));
    s.push_str(&format!("eps = {}\n", fmt_sig(r.eps)));
    s.push_str(&format!(
        "grad_norm = {}\n",
        match r.convention {
            GradNormConvention::Euclidean => "euclidean",
            GradNormConvention::Axis => "axis",
        }
    ));
    let c = &r.constants;
    s.push_str(&format!("c0 = {}\n", fmt_sig(c.c0)));
    s.push_str(&format!("c0h = {}\n", fmt_sig(c.c0h)));
    s.push_str(&format!("cp = {}\n", fmt_sig(c.cp)));
    match c.cp_provenance {
        CpProvenance::ExactUnitSquare => s.push_str("cp_provenance = exact\n"),
        CpProvenance::CrBound { lambda_h, lambda_lower_bound } => {
            s.push_str(&format!(
                "cp_provenance = cr_bound lambda_h={} lambda_lower={}\n",
                fmt_sig(lambda_h),
                fmt_sig(lambda_lower_bound)
            ));
        }
    }
    s.push_str(&format!("kappa_h = {}\n", fmt_sig(c.kappa.guaranteed)));
    s.push_str(&format!("kappa_h_raw = {}\n", fmt_sig(c.kappa.raw)));
    s.push_str(&format!("c_of_h = {}\n", fmt_sig(c.c_of_h)));
    if matches!(cfg.domain, Domain::UnitSquare) {
        s.push_str(&format!(
            "c_of_h_h2_regular = {}\n",
            fmt_sig(hypercircle::constants::c_of_h_h2_regular(r.h))
        ));
    }
    s.push_str(&format!("data_osc = {}\n", fmt_sig(r.data_osc)));
    s.push_str(&format!("flux_gap = {}\n", fmt_sig(r.flux_gap)));
    s.push_str(&format!("err1 = {}\n", fmt_sig(r.err1)));
    s.push_str(&format!("err2 = {}\n", fmt_sig(r.err2)));
    s.push_str(&format!("err3 = {}\n", fmt_sig(r.err3)));
    s.push_str(&format!("local_bound = {}\n", fmt_sig(r.local_bound)));
    s.push_str(&format!("global_bound = {}\n", fmt_sig(r.global_bound)));
    if let Some(v) = r.exact_local {
        s.push_str(&format!("exact_local = {}\n", fmt_sig(v)));
    }
    if let Some(v) = r.exact_global {
        s.push_str(&format!("exact_global = {}\n", fmt_sig(v)));
    }
    let t = &r.timings;
    s.push_str(&format!("time_solve_conforming_ms = {}\n", t.solve_conforming.as_millis()));
    s.push_str(&format!("time_solve_mixed_ms = {}\n", t.solve_mixed.as_millis()));
    s.push_str(&format!("time_constants_ms = {}\n", t.constants.as_millis()));
    s.push_str(&format!("time_estimate_ms = {}\n", t.estimate.as_millis()));
    s.push_str(&format!("time_total_ms = {}\n", t.total.as_millis()));
    fs::write(path, s).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn ensure_out(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out)
        .with_context(|| format!("creating output directory {}", cfg.out.display()))
}

/// Single case: one n, one ε. Writes report.txt and a one-row table.csv.
pub fn run_case(cfg: &RunConfig) -> Result<EstimateReport> {
    anyhow::ensure!(cfg.n_list.len() == 1, "run needs exactly one n (got {:?})", cfg.n_list);
    anyhow::ensure!(cfg.eps_list.len() == 1, "run needs exactly one eps (got {:?})", cfg.eps_list);
    ensure_out(cfg)?;
    let setup = prepare_case(cfg, cfg.n_list[0])?;
    let report = estimate_with(&setup, cfg.s, cfg.eps_list[0], cfg.grad_norm)?;
    write_report(&report, cfg, &cfg.out.join("report.txt"))?;
    let mut csv = String::from(MESH_TABLE_HEADER);
    csv.push('\n');
    csv.push_str(&mesh_table_row(&report));
    csv.push('\n');
    fs::write(cfg.out.join("table.csv"), csv)?;
    Ok(report)
}

/// One run per n at fixed ε; failed rows are recorded as comments and the
/// sweep continues.
pub fn sweep_mesh(cfg: &RunConfig) -> Result<Vec<EstimateReport>> {
    anyhow::ensure!(cfg.eps_list.len() == 1, "sweep-mesh needs exactly one eps");
    ensure_out(cfg)?;
    let eps = cfg.eps_list[0];
    let rows: Vec<(u32, Result<EstimateReport>)> = cfg
        .n_list
        .par_iter()
        .map(|&n| {
            let row = prepare_case(cfg, n).and_then(|s| estimate_with(&s, cfg.s, eps, cfg.grad_norm));
            (n, row)
        })
        .collect();

    let mut csv = String::from(MESH_TABLE_HEADER);
    csv.push('\n');
    let mut ok_rows = Vec::new();
    for (n, row) in rows {
        match row {
            Ok(r) => {
                csv.push_str(&mesh_table_row(&r));
                csv.push('\n');
                write_report(&r, cfg, &cfg.out.join(format!("report_n{n}.txt")))?;
                ok_rows.push(r);
            }
            Err(e) => {
                eprintln!("sweep-mesh: n={n} failed: {e:#}");
                csv.push_str(&format!("# n={n} failed: {e}\n"));
            }
        }
    }
    fs::write(cfg.out.join("table.csv"), csv)?;
    Ok(ok_rows)
}

/// One run per ε at fixed n; the solves and constants are shared across ε.
/// Emits table.csv and the two-column gnuplot file band.dat.
pub fn sweep_band(cfg: &RunConfig) -> Result<Vec<EstimateReport>> {
    anyhow::ensure!(cfg.n_list.len() == 1, "sweep-band needs exactly one n");
    ensure_out(cfg)?;
    let setup = prepare_case(cfg, cfg.n_list[0])?;
    let rows: Vec<(f64, Result<EstimateReport>)> = cfg
        .eps_list
        .iter()
        .map(|&eps| (eps, estimate_with(&setup, cfg.s, eps, cfg.grad_norm)))
        .collect();

    let mut csv = String::from(BAND_TABLE_HEADER);
    csv.push('\n');
    let mut dat = String::new();
    let mut ok_rows = Vec::new();
    for (eps, row) in rows {
        match row {
            Ok(r) => {
                csv.push_str(&band_table_row(&r));
                csv.push('\n');
                dat.push_str(&format!("{} {}\n", fmt_sig(eps), fmt_sig(r.local_bound)));
                ok_rows.push(r);
            }
            Err(e) => {
                eprintln!("sweep-band: eps={eps} failed: {e:#}");
                csv.push_str(&format!("# eps={eps} failed: {e}\n"));
            }
        }
    }
    fs::write(cfg.out.join("table.csv"), csv)?;
    fs::write(cfg.out.join("band.dat"), dat)?;
    Ok(ok_rows)
}

/// Write the mesh of the first configured n as plain text.
pub fn dump_mesh(cfg: &RunConfig) -> Result<()> {
    anyhow::ensure!(!cfg.n_list.is_empty(), "dump-mesh needs n");
    ensure_out(cfg)?;
    let mesh = build_mesh(cfg, cfg.n_list[0])?;
    let mut out = Vec::new();
    mesh.dump(&mut out)?;
    fs::write(cfg.out.join("mesh.txt"), out)?;
    Ok(())
}
