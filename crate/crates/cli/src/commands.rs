use waistlab::ballbody::{ball_body, ball_body_invariants, direction_table, Density};
use waistlab::bodies::io::load_body;
use waistlab::bodies::Kind;
use waistlab::constants::{psi_alpha_constant, DEFAULT_P_GRID};
use waistlab::linalg;
use waistlab::localization::{dyadic_equipartition, equipartition_check, peak_point, recount, spingarn_check, Functional, PartitionTree};
use waistlab::maps::{parse_map, MapRef};
use waistlab::measures::estimate_volume;
use waistlab::positions::{gaussian_m_position, hyperoctahedral_group, isotropic_constant, isotropic_transform, verify_symmetry_commutation, MPositionOptions};
use waistlab::report::matrix_rows;
use waistlab::rng::derive_seed;
use waistlab::special::normal_cdf;
use waistlab::suite::{run_criterion, Level, CRITERIA};
use waistlab::waist::{
    box_waist_check, gaussian_waist_check, section_theorem_check, symmetric_body_waist_check, Integration, SearchOptions, DEFAULT_EPS,
    DEFAULT_R_GRID,
};
use waistlab::{CheckRecord, ConvexBody, Error, MeasureModel, Result, Status, VerificationReport};

use crate::{Cli, Command, Common, WaistArgs};

pub fn run(cli: &Cli, report: &mut VerificationReport) -> Result<()> {
    let c = &cli.common;
    match &cli.command {
        Command::Volume(b) => volume(c, &b.body, report),
        Command::Isotropic(b) => isotropic(c, &b.body, report),
        Command::Mposition { body, symmetric } => mposition(c, &body.body, *symmetric, report),
        Command::Psi { body, alpha, directions, pgrid } => psi(c, &body.body, *alpha, *directions, pgrid.as_deref(), report),
        Command::Ballbody { body, directions } => ballbody(c, body, *directions, report),
        Command::Waist(w) => waist(c, w, report),
        Command::Section(w) => section(c, w, report),
        Command::Partition { body, depth, tolerance, tree_out, recount: saved } => {
            partition(c, body, *depth, *tolerance, tree_out.as_deref(), saved.as_deref(), report)
        }
        Command::Peak { density, ell, rgrid, tolerance } => peak(c, density, *ell, rgrid.as_deref(), *tolerance, report),
        Command::Spingarn { body, v, rgrid } => spingarn(c, &body.body, v.as_deref(), rgrid.as_deref(), report),
        Command::Suite { level, criteria } => suite(c, level, criteria.as_deref(), report),
    }
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number {v:?} in {what}"))))
        .collect()
}

fn parse_levels(s: &str) -> Result<Vec<Vec<f64>>> {
    s.split(';').map(|l| parse_list(l, "--tgrid")).collect()
}

/// `gaussianN` → `Some(N)`.
fn gaussian_dim(spec: &str) -> Option<usize> {
    spec.strip_prefix("gaussian").and_then(|d| d.parse().ok()).filter(|n| *n > 0)
}

fn integration(c: &Common, dim: usize) -> Result<Integration> {
    if !c.quadrature {
        return Ok(Integration::MonteCarlo { budget: c.budget });
    }
    if dim > 3 {
        return Err(Error::Unsupported(format!("--quadrature needs dimension ≤ 3, got {dim}")));
    }
    // about `budget` cells in total
    let resolution = (c.budget as f64).powf(1.0 / dim as f64).ceil().max(8.0) as usize;
    Ok(Integration::Grid { resolution })
}

fn volume(c: &Common, spec: &str, report: &mut VerificationReport) -> Result<()> {
    let body = load_body(spec)?;
    report.describe(format!("body {spec}"));
    let v = estimate_volume(&body, c.budget, derive_seed(c.seed, 1));
    let mut rec = CheckRecord::new("volume", "volume of the body").status(Status::Pass).estimate("volume", &v);
    if v.samples == 0 {
        rec = rec.note("closed form");
    }
    report.push(rec);
    Ok(())
}

fn isotropic(c: &Common, spec: &str, report: &mut VerificationReport) -> Result<()> {
    let body = load_body(spec)?;
    report.describe(format!("uniform measure on {spec}"));
    let iso = isotropic_transform(&body, Some(1.0), c.budget, derive_seed(c.seed, 1))?;
    let l = isotropic_constant(&MeasureModel::uniform(body), c.budget, derive_seed(c.seed, 2))?;
    report.push(
        CheckRecord::new("isotropic_position", "isotropic position and constant")
            .status(Status::Pass)
            .estimate("isotropic_constant", &l)
            .detail("barycenter", &iso.barycenter)
            .detail("matrix", matrix_rows(&iso.matrix))
            .detail("covariance", matrix_rows(&iso.covariance)),
    );
    Ok(())
}

fn mposition(c: &Common, spec: &str, symmetric: bool, report: &mut VerificationReport) -> Result<()> {
    let body = load_body(spec)?;
    let n = body.dim();
    report.describe(format!("body {spec}"));
    // symmetries act about the center of symmetry, so recentre first
    let body = match (symmetric, body.center_of_symmetry()) {
        (true, Some(ctr)) => body.translate(linalg::scale(&ctr, -1.0))?,
        (true, None) => return Err(Error::Precondition("--symmetric needs a centrally symmetric body".into())),
        _ => body,
    };
    let group = if symmetric { preserving_signed_permutations(&body, derive_seed(c.seed, 3))? } else { Vec::new() };
    let opts = MPositionOptions { budget: c.budget, seed: derive_seed(c.seed, 1), symmetries: group.clone(), ..Default::default() };
    let r = gaussian_m_position(&body, &opts)?;
    let mut diff = r.transform.matrix().clone();
    for i in 0..n {
        diff[(i, i)] -= 1.0;
    }
    let dist = linalg::op_norm(&diff);
    report.push(r.to_check("m_position").exact("distance_to_identity", dist));
    if symmetric {
        report.push(verify_symmetry_commutation(&body, &group, &r.transform, 1e-6, derive_seed(c.seed, 2))?);
    }
    Ok(())
}

/// Signed permutation matrices mapping the body into itself on a uniform probe sample.
fn preserving_signed_permutations(body: &ConvexBody, seed: u64) -> Result<Vec<nalgebra::DMatrix<f64>>> {
    let pts = MeasureModel::uniform(body.clone()).sample(2000, seed)?;
    Ok(hyperoctahedral_group(body.dim())
        .into_iter()
        .filter(|q| pts.iter().all(|x| body.contains(&linalg::mat_vec(q, x))))
        .collect())
}

fn psi(c: &Common, spec: &str, alpha: f64, directions: usize, pgrid: Option<&str>, report: &mut VerificationReport) -> Result<()> {
    let body = load_body(spec)?;
    report.describe(format!("uniform measure on {spec}"));
    let ps = match pgrid {
        Some(s) => parse_list(s, "--pgrid")?,
        None => DEFAULT_P_GRID.to_vec(),
    };
    let e = psi_alpha_constant(&MeasureModel::uniform(body), alpha, directions, &ps, c.budget, derive_seed(c.seed, 1))?;
    report.push(
        CheckRecord::new("psi_alpha", "ψ_α probe (a lower bound for the constant)")
            .status(Status::Pass)
            .quantity(waistlab::Quantity { name: "psi".into(), value: e.value, std_error: 0.0, samples: e.samples, seed: e.seed })
            .exact("alpha", alpha)
            .exact("argmax_p", e.argmax_p)
            .detail("argmax_direction", &e.argmax_direction)
            .detail("p_grid", &e.p_grid),
    );
    Ok(())
}

fn ballbody(c: &Common, spec: &str, directions: usize, report: &mut VerificationReport) -> Result<()> {
    let (density, measure) = match gaussian_dim(spec) {
        Some(n) => (Density::gaussian(n), MeasureModel::gaussian(n)),
        None => {
            let body = load_body(spec)?;
            let ctr = body
                .center_of_symmetry()
                .ok_or_else(|| Error::Precondition("ball body needs an even density: the body must be centrally symmetric".into()))?;
            let body = body.translate(linalg::scale(&ctr, -1.0))?;
            let m = MeasureModel::uniform(body);
            (Density::of_measure(&m), m)
        }
    };
    report.describe(format!("density {spec}"));
    let n = density.dim();
    let k = ball_body(&density, &direction_table(n, directions), 1e-12)?;
    let table = match k.kind() {
        Kind::Radial(f) => f.table(),
        _ => Vec::new(),
    };
    report.push(
        CheckRecord::new("ball_body", "radial function of K(μ)")
            .status(Status::Pass)
            .exact("min_radius", table.iter().map(|t| t.1).fold(f64::INFINITY, f64::min))
            .exact("max_radius", table.iter().map(|t| t.1).fold(0.0, f64::max))
            .detail("table", &table),
    );
    for r in ball_body_invariants(&density, &measure, &k, c.budget, derive_seed(c.seed, 1))? {
        report.push(r);
    }
    Ok(())
}

fn map_for(w: &WaistArgs, n: usize) -> Result<MapRef> {
    let map = parse_map(&w.map, n)?;
    if let Some(ell) = w.ell {
        if ell != map.dim_out() {
            return Err(Error::Precondition(format!("--ell {ell} but map {} has {} outputs", w.map, map.dim_out())));
        }
    }
    Ok(map)
}

fn search_options(c: &Common, w: &WaistArgs, n: usize) -> Result<SearchOptions> {
    Ok(SearchOptions {
        eps: match &w.eps {
            Some(s) => parse_list(s, "--eps")?,
            None => DEFAULT_EPS.to_vec(),
        },
        integration: integration(c, n)?,
        seed: derive_seed(c.seed, 1),
        t_grid: w.tgrid.as_deref().map(parse_levels).transpose()?,
        ..Default::default()
    })
}

/// `(lo, sides)` when the body is an axis-parallel box.
fn axis_box(body: &ConvexBody) -> Option<(Vec<f64>, Vec<f64>)> {
    let v = body.exact_volume()?;
    body.polyhedral()?;
    let (lo, hi) = body.bounding_box();
    let sides: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| b - a).collect();
    let prod: f64 = sides.iter().product();
    ((prod - v).abs() <= 1e-12 * v).then_some((lo, sides))
}

fn waist(c: &Common, w: &WaistArgs, report: &mut VerificationReport) -> Result<()> {
    let rgrid = w.rgrid.as_deref().map(|s| parse_list(s, "--rgrid")).transpose()?;
    if let Some(n) = gaussian_dim(&w.body) {
        let map = map_for(w, n)?;
        report.describe(format!("standard gaussian on R^{n}; map {}", map.name()));
        let t = w.tgrid.as_deref().map(parse_levels).transpose()?;
        let cert = gaussian_waist_check(&map, t, rgrid.as_deref().unwrap_or(&DEFAULT_R_GRID), integration(c, n)?, derive_seed(c.seed, 1))?;
        report.push(cert.to_check("gaussian_waist"));
        return Ok(());
    }
    let body = load_body(&w.body)?;
    let n = body.dim();
    let map = map_for(w, n)?;
    report.describe(format!("body {}; map {}", w.body, map.name()));
    if let Some((lo, sides)) = axis_box(&body) {
        if lo.iter().any(|x| x.abs() > 1e-12) {
            return Err(Error::Precondition("box waist expects a box with a corner at the origin".into()));
        }
        let cert = box_waist_check(&sides, &map, &search_options(c, w, n)?)?;
        for r in cert.to_checks("box_waist") {
            report.push(r);
        }
        return Ok(());
    }
    if body.is_origin_symmetric() {
        let t = w.tgrid.as_deref().map(parse_levels).transpose()?;
        let rs = rgrid.unwrap_or_else(|| vec![0.25, 0.5, 0.75]);
        let cert = symmetric_body_waist_check(&body, &MeasureModel::uniform(body.clone()), &map, t, &rs, c.budget, derive_seed(c.seed, 1))?;
        report.push(cert.to_check("symmetric_body_waist"));
        return Ok(());
    }
    Err(Error::Unsupported("waist needs gaussianN, an axis box at the origin, or an origin-symmetric body; try `section`".into()))
}

fn section(c: &Common, w: &WaistArgs, report: &mut VerificationReport) -> Result<()> {
    let body = load_body(&w.body)?;
    let n = body.dim();
    let map = map_for(w, n)?;
    report.describe(format!("body {}; map {}", w.body, map.name()));
    let cert = section_theorem_check(&body, &map, w.flats, &search_options(c, w, n)?)?;
    report.push(cert.to_check("section_theorem"));
    Ok(())
}

fn partition(
    c: &Common,
    spec: &str,
    depth: usize,
    tolerance: f64,
    tree_out: Option<&std::path::Path>,
    saved: Option<&std::path::Path>,
    report: &mut VerificationReport,
) -> Result<()> {
    let measure = match gaussian_dim(spec) {
        Some(n) => MeasureModel::gaussian(n),
        None => MeasureModel::uniform(load_body(spec)?),
    };
    report.describe(format!("measure {}", measure.describe()));
    let tree: PartitionTree = match saved {
        Some(p) => {
            let t: PartitionTree = serde_json::from_str(&std::fs::read_to_string(p)?)?;
            if t.dim != measure.dim() {
                return Err(Error::DimensionMismatch { expected: measure.dim(), got: t.dim });
            }
            t
        }
        None => dyadic_equipartition(&measure, &Functional::Measure, depth, &[], c.budget, derive_seed(c.seed, 1))?,
    };
    if let Some(p) = tree_out {
        std::fs::write(p, serde_json::to_string_pretty(&tree)? + "\n")?;
    }
    let rc = recount(&tree, &measure, &Functional::Measure, c.budget, derive_seed(c.seed, 2))?;
    report.push(equipartition_check(&tree, &rc, tolerance).detail("leaf_count", tree.leaf_count()));
    Ok(())
}

fn peak(c: &Common, spec: &str, ell: usize, rgrid: Option<&str>, tol: f64, report: &mut VerificationReport) -> Result<()> {
    let (head, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let density = match head {
        "gaussian" => Density::gaussian(ell),
        "tilted" => {
            let s = parse_list(arg, "tilted")?;
            let k = s[0];
            Density::new(ell, spec, move |x: &[f64]| (-0.5 * linalg::dot(x, x) - k * x[0]).exp())
        }
        "truncated" => {
            let ab = parse_list(arg, "truncated")?;
            if ell != 1 || ab.len() != 2 || !(ab[0] < ab[1]) {
                return Err(Error::Parse("truncated:a,b needs a < b and --ell 1".into()));
            }
            let (a, b) = (ab[0], ab[1]);
            Density::new(1, spec, move |x: &[f64]| if (a..=b).contains(&x[0]) { (-0.5 * x[0] * x[0]).exp() } else { 0.0 })
        }
        _ => return Err(Error::Parse(format!("unknown density {spec:?}"))),
    };
    report.describe(format!("density {spec} on R^{ell}"));
    let rs = match rgrid {
        Some(s) => parse_list(s, "--rgrid")?,
        None => vec![0.25, 0.5, 1.0, 2.0],
    };
    let cert = peak_point(&density, &rs, tol, derive_seed(c.seed, 1))?;
    let mut rec = cert.to_check("peak_point");
    if head == "gaussian" && ell == 1 {
        let err = cert.rows.iter().map(|r| (r.achieved - (2.0 * normal_cdf(r.r) - 1.0)).abs()).fold(0.0, f64::max);
        rec = rec.exact("max_error_vs_closed_form", err);
    }
    report.push(rec);
    Ok(())
}

fn spingarn(c: &Common, spec: &str, v: Option<&str>, rgrid: Option<&str>, report: &mut VerificationReport) -> Result<()> {
    let body = load_body(spec)?;
    let n = body.dim();
    let v = match v {
        Some(s) => load_body(s)?,
        None => body.clone(),
    };
    report.describe(format!("uniform measure on {spec}"));
    let rs = match rgrid {
        Some(s) => parse_list(s, "--rgrid")?,
        None => (1..=9).map(|i| i as f64 / 10.0).collect(),
    };
    let sub = spingarn_check(&MeasureModel::uniform(body), &v, &rs, integration(c, n)?, derive_seed(c.seed, 1))?;
    for d in sub.descriptors {
        report.describe(d);
    }
    for ch in sub.checks {
        report.push(ch);
    }
    Ok(())
}

fn suite(c: &Common, level: &str, criteria: Option<&str>, report: &mut VerificationReport) -> Result<()> {
    let level = Level::parse(level)?;
    let ids: Vec<u32> = match criteria {
        Some(s) => s
            .split(',')
            .map(|v| v.trim().parse::<u32>().ok().filter(|i| CRITERIA.iter().any(|c| c.0 == *i)))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::Parse(format!("criteria must be numbers in 1..=11, got {s:?}")))?,
        None => CRITERIA.iter().map(|c| c.0).collect(),
    };
    for id in ids {
        let r = run_criterion(id, level, c.seed)?;
        report.describe(r.summary());
        for mut ch in r.checks {
            ch.name = format!("c{id}_{}", ch.name);
            report.push(ch);
        }
    }
    Ok(())
}
