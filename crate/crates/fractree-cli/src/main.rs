//! Command-line front end: render tree attractors, run subdivision
//! experiments, and emit convergence/certificate tables as CSV/SVG files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use fractree::geometry::{sample_flat, FlatSpec, Point, PointSet};
use fractree::maps::FunctionSystem;
use fractree::render::{attractor_csv, svg_scatter};
use fractree::staircase::{sfs_certification, staircase_sfs_trajectory, BaseSetSequence};
use fractree::subdivision::{
    bspline_scheme, chaikin_scheme, convergence_report, lazy_scheme,
    location_dependent_chaikin, nonuniform_tree, scheme_to_staircase_sfs, shows_convergence,
    slanted_dims, staircase_bridge_check, subdivide_levels, up_function_scheme, BridgeBase,
    ControlPolygon, Mask, Scheme,
};
use fractree::tree::{
    cantor_tree, max_node_lipschitz, path_product_sup, tfs_example_tree, tree_attractor,
    tree_attractor_labeled, MapTree,
};

#[derive(Parser)]
#[command(
    name = "fractree",
    about = "Attractors of trees of maps and subdivision-scheme experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a depth-k tree attractor to CSV and SVG.
    Attractor(AttractorArgs),
    /// Run a subdivision scheme and emit per-level polygons plus the
    /// convergence diagnostics table.
    Subdivide(SubdivideArgs),
    /// Run a scheme through its backward constructions and the direct
    /// subdivision side by side, reporting per-depth Hausdorff distances.
    Compare(CompareArgs),
    /// Print the backward-convergence certification tables for a scheme's
    /// staircase systems, including automatic grouping retries.
    Certify(CertifyArgs),
}

/// JSON file mirroring the flags; explicit flags override its entries.
#[derive(Deserialize, Default)]
struct ConfigFile {
    tree: Option<String>,
    scheme: Option<String>,
    polygon: Option<String>,
    depth: Option<usize>,
    levels: Option<usize>,
    min_depth: Option<usize>,
    tol: Option<f64>,
    max_k: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

fn load_config(path: &Option<PathBuf>) -> Result<ConfigFile> {
    match path {
        None => Ok(ConfigFile::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

#[derive(Args)]
struct AttractorArgs {
    /// Tree selector: tfs-example | cantor | file:PATH (function-system JSON)
    #[arg(long)]
    tree: Option<String>,
    /// Enumeration depth (2^depth points).
    #[arg(long)]
    depth: Option<usize>,
    /// Base point coordinates, comma separated (defaults to the origin).
    #[arg(long)]
    base: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SubdivideArgs {
    /// Scheme selector: chaikin | bspline:D | upfn | lazy | chaikin-var | file:PATH
    #[arg(long)]
    scheme: Option<String>,
    /// Initial polygon: square | delta:PAD | file:PATH (CSV)
    #[arg(long)]
    polygon: Option<String>,
    /// Number of refinement levels.
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    polygon: Option<String>,
    /// First compared depth.
    #[arg(long)]
    min_depth: Option<usize>,
    /// Last compared depth.
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    polygon: Option<String>,
    /// Certificate tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Horizon for the truncated certificate series.
    #[arg(long)]
    max_k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn parse_tree(selector: &str) -> Result<MapTree> {
    match selector {
        "tfs-example" => Ok(tfs_example_tree()),
        "cantor" => Ok(cantor_tree()),
        other => {
            let path = other
                .strip_prefix("file:")
                .with_context(|| format!("unknown tree {other:?} (use tfs-example, cantor or file:PATH)"))?;
            let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
            let system = FunctionSystem::from_json(&text)?;
            Ok(MapTree::constant(&system)?)
        }
    }
}

/// Scheme JSON: {"kind": "stationary", "mask": [...]} |
/// {"kind": "bspline", "degree": D} | {"kind": "non-stationary", "rule": "upfn"} |
/// {"kind": "non-uniform", "rule": "chaikin-var", "n0": N, "t_min": .., "t_max": ..}
#[derive(Deserialize)]
struct SchemeSpec {
    kind: String,
    mask: Option<Vec<f64>>,
    degree: Option<u32>,
    rule: Option<String>,
    n0: Option<usize>,
    t_min: Option<f64>,
    t_max: Option<f64>,
}

fn parse_scheme(selector: &str) -> Result<Scheme> {
    if let Some(degree) = selector.strip_prefix("bspline:") {
        return Ok(bspline_scheme(degree.parse().context("bad B-spline degree")?));
    }
    match selector {
        "chaikin" => Ok(chaikin_scheme()),
        "lazy" => Ok(lazy_scheme()),
        "upfn" => Ok(up_function_scheme()),
        "chaikin-var" => Ok(location_dependent_chaikin(6, 0.15, 0.35)),
        other => {
            let path = other
                .strip_prefix("file:")
                .with_context(|| format!("unknown scheme {other:?}"))?;
            let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
            let spec: SchemeSpec = serde_json::from_str(&text).context("parsing scheme JSON")?;
            match spec.kind.as_str() {
                "stationary" => {
                    let mask = Mask::new(spec.mask.context("stationary schemes need a mask")?)?;
                    Ok(Scheme::stationary("custom", mask))
                }
                "bspline" => Ok(bspline_scheme(spec.degree.context("bspline needs a degree")?)),
                "non-stationary" => match spec.rule.as_deref() {
                    Some("upfn") => Ok(up_function_scheme()),
                    other => bail!("unknown non-stationary rule {other:?}"),
                },
                "non-uniform" => match spec.rule.as_deref() {
                    Some("chaikin-var") => Ok(location_dependent_chaikin(
                        spec.n0.unwrap_or(6),
                        spec.t_min.unwrap_or(0.15),
                        spec.t_max.unwrap_or(0.35),
                    )),
                    other => bail!("unknown non-uniform rule {other:?}"),
                },
                other => bail!("unknown scheme kind {other:?}"),
            }
        }
    }
}

fn parse_polygon(selector: &str) -> Result<ControlPolygon> {
    if let Some(pad) = selector.strip_prefix("delta:") {
        return Ok(fractree::subdivision::delta_polygon(pad.parse().context("bad delta pad")?));
    }
    match selector {
        "square" => Ok(fractree::subdivision::square_polygon()),
        other => {
            let path = other
                .strip_prefix("file:")
                .with_context(|| format!("unknown polygon {other:?}"))?;
            let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
            let set = PointSet::from_csv(&text)?;
            Ok(ControlPolygon::new(set.points().to_vec(), 0)?)
        }
    }
}

/// Default polygon per scheme: growing masks need generous padding.
fn default_polygon(scheme: &Scheme) -> &'static str {
    if scheme.growth_degree() > 0 {
        "delta:22"
    } else {
        "square"
    }
}

/// Resolve a scheme and its initial polygon together: the location
/// dependent corner-cutting preset is rebuilt against the polygon's actual
/// point count, since its tension profile is indexed by the per-level
/// output counts that follow from it.
fn resolve_scheme_and_polygon(
    scheme_sel: &str,
    polygon_sel: Option<String>,
) -> Result<(Scheme, ControlPolygon)> {
    let scheme = parse_scheme(scheme_sel)?;
    let polygon_sel = polygon_sel.unwrap_or_else(|| default_polygon(&scheme).into());
    let p0 = parse_polygon(&polygon_sel)?;
    let scheme = if scheme_sel == "chaikin-var" {
        location_dependent_chaikin(p0.len(), 0.15, 0.35)
    } else {
        scheme
    };
    Ok((scheme, p0))
}

fn ensure_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_attractor(args: AttractorArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let selector = args.tree.or(cfg.tree).unwrap_or_else(|| "tfs-example".into());
    let depth = args.depth.or(cfg.depth).unwrap_or(12);
    let out = args.out.or(cfg.out).unwrap_or_else(|| PathBuf::from("out"));
    let tree = parse_tree(&selector)?;
    let base = match &args.base {
        Some(text) => Point::new(
            text.split(',')
                .map(|f| f.trim().parse::<f64>().context("bad base coordinate"))
                .collect::<Result<Vec<f64>>>()?,
        )?,
        None => Point::new(vec![0.0; tree.dimension()])?,
    };

    let labeled = tree_attractor_labeled(&tree, &base, depth)?;
    let points = tree_attractor(&tree, &base, depth)?;
    ensure_out(&out)?;
    write_text(&out, "attractor.csv", &attractor_csv(&labeled))?;
    if points.dim() == 2 {
        write_text(&out, "attractor.svg", &svg_scatter(&points, 900)?)?;
    }

    println!("tree {selector}, depth {depth}: {} points", points.len());
    let diameter = points.bounding_box().diameter();
    let sup = path_product_sup(&tree, depth)?;
    let lip = max_node_lipschitz(&tree, depth)?;
    if lip < 1.0 {
        let tail = sup[depth - 1] / (1.0 - lip);
        println!(
            "truncation bound (Hausdorff, diam {diameter:.6} x tail {tail:.3e}): {:.3e}",
            diameter * tail
        );
    } else {
        println!("no contraction certificate: max node Lipschitz {lip:.6} >= 1 at depth {depth}");
    }
    Ok(())
}

fn cmd_subdivide(args: SubdivideArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let selector = args.scheme.or(cfg.scheme).unwrap_or_else(|| "chaikin".into());
    let (scheme, p0) = resolve_scheme_and_polygon(&selector, args.polygon.or(cfg.polygon))?;
    let levels = args.levels.or(cfg.levels).unwrap_or(6);
    let out = args.out.or(cfg.out).unwrap_or_else(|| PathBuf::from("out"));

    let cascade = subdivide_levels(&scheme, &p0, levels)?;
    ensure_out(&out)?;
    for poly in &cascade {
        write_text(
            &out,
            &format!("level_{:02}.csv", poly.level()),
            &poly.to_point_set().to_csv(),
        )?;
    }
    let report = convergence_report(&scheme, &p0, levels)?;
    let mut csv = String::from("level,hausdorff_gap,max_displacement\n");
    println!("level  h(p^k, p^k+1)   sup displacement");
    for row in &report {
        csv.push_str(&format!(
            "{},{},{}\n",
            row.level, row.hausdorff_gap, row.max_displacement
        ));
        println!(
            "{:>5}  {:<14.6e}  {:<14.6e}",
            row.level, row.hausdorff_gap, row.max_displacement
        );
    }
    write_text(&out, "report.csv", &csv)?;
    if shows_convergence(&report) {
        println!("displacement column shrinking: convergence evidence");
    } else {
        println!("no convergence evidence");
    }
    Ok(())
}

struct CompareRow {
    depth: usize,
    sfs_gap: Option<f64>,
    tree_gap: Option<f64>,
    identity_gap: f64,
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let selector = args.scheme.or(cfg.scheme).unwrap_or_else(|| "chaikin".into());
    let (scheme, p0) = resolve_scheme_and_polygon(&selector, args.polygon.or(cfg.polygon))?;
    let min_depth = args.min_depth.or(cfg.min_depth).unwrap_or(4);
    let max_depth = args.depth.or(cfg.depth).unwrap_or(12);
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let out = args.out.or(cfg.out).unwrap_or_else(|| PathBuf::from("out"));
    if min_depth < 1 || max_depth < min_depth {
        bail!("need 1 <= min-depth <= depth");
    }
    let n0 = p0.len();
    let flat_bound = 4.0;

    let sfs = scheme_to_staircase_sfs(&scheme, &p0, flat_bound)?;
    // fixed-size schemes keep one dimension, so one base set serves every
    // level; growing masks need per-level samples
    let base = if scheme.fixed_size() {
        let fixed = sample_flat(&FlatSpec::bounded(n0, flat_bound), 3, seed);
        BaseSetSequence::new(move |_| fixed.clone())
    } else {
        let scheme_for_dims = scheme.clone();
        BaseSetSequence::new(move |i| {
            let dims = slanted_dims(&scheme_for_dims, n0, i).expect("depth checked by caller");
            sample_flat(&FlatSpec::bounded(dims[i], flat_bound), 3, seed ^ (i as u64))
        })
    };
    let tree = if scheme.fixed_size() {
        Some(nonuniform_tree(&scheme, &p0)?)
    } else {
        None
    };
    let tree_base = sample_flat(&FlatSpec::bounded(n0, flat_bound), 1, seed).points()[0].clone();

    let mut rows = Vec::new();
    for depth in min_depth..=max_depth {
        if slanted_dims(&scheme, n0, depth).is_err() {
            println!("depth {depth}: staircase pipeline exhausted, stopping");
            break;
        }
        let direct = subdivide_levels(&scheme, &p0, depth)?
            .pop()
            .expect("cascade is nonempty")
            .to_point_set();
        let sfs_set = staircase_sfs_trajectory(&sfs, &base, depth)?;
        let sfs_gap = fractree::geometry::hausdorff(&sfs_set, &direct)?;
        let tree_gap = match &tree {
            Some(t) => {
                let attr = tree_attractor(t, &tree_base, depth)?;
                Some(fractree::geometry::hausdorff(&attr, &direct)?)
            }
            None => None,
        };
        let identity_gap = staircase_bridge_check(&scheme, &p0, depth, seed, BridgeBase::Identity)?;
        rows.push(CompareRow {
            depth,
            sfs_gap: Some(sfs_gap),
            tree_gap,
            identity_gap,
        });
    }

    ensure_out(&out)?;
    let mut csv = String::from("depth,sfs_gap,tree_gap,identity_gap\n");
    println!("depth  sfs gap        tree gap       identity gap");
    for row in &rows {
        let fmt = |v: &Option<f64>| v.map(|g| g.to_string()).unwrap_or_default();
        csv.push_str(&format!(
            "{},{},{},{}\n",
            row.depth,
            fmt(&row.sfs_gap),
            fmt(&row.tree_gap),
            row.identity_gap
        ));
        println!(
            "{:>5}  {:<13}  {:<13}  {:<13}",
            row.depth,
            row.sfs_gap.map(|g| format!("{g:.6e}")).unwrap_or_else(|| "-".into()),
            row.tree_gap.map(|g| format!("{g:.6e}")).unwrap_or_else(|| "-".into()),
            format!("{:.1e}", row.identity_gap),
        );
    }
    write_text(&out, "compare.csv", &csv)?;

    // fixed-size runs keep one base set, so strict decrease is demanded;
    // growing masks resample bases per level and only the trend is read
    let strictly_decreasing = |gaps: &[f64]| gaps.windows(2).all(|w| w[1] < w[0]);
    let trend = |gaps: &[f64]| gaps.len() >= 2 && gaps[gaps.len() - 1] < gaps[0];
    let sfs_gaps: Vec<f64> = rows.iter().filter_map(|r| r.sfs_gap).collect();
    let sfs_ok = if scheme.fixed_size() {
        sfs_gaps.len() >= 2 && strictly_decreasing(&sfs_gaps)
    } else {
        trend(&sfs_gaps)
    };
    let tree_gaps: Vec<f64> = rows.iter().filter_map(|r| r.tree_gap).collect();
    let tree_ok = tree.is_none() || (tree_gaps.len() >= 2 && strictly_decreasing(&tree_gaps));
    let identity_ok = rows.iter().all(|r| r.identity_gap == 0.0);
    if sfs_ok && tree_ok && identity_ok {
        println!("verdict: pass (gaps decreasing, identity base exact)");
    } else {
        println!("verdict: inconclusive");
    }
    Ok(())
}

fn cmd_certify(args: CertifyArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let selector = args.scheme.or(cfg.scheme).unwrap_or_else(|| "chaikin".into());
    let (scheme, p0) = resolve_scheme_and_polygon(&selector, args.polygon.or(cfg.polygon))?;
    let tol = args.tol.or(cfg.tol).unwrap_or(1e-6);
    let max_k = args.max_k.or(cfg.max_k).unwrap_or(16);
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let out = args.out.or(cfg.out).unwrap_or_else(|| PathBuf::from("out"));
    let n0 = p0.len();
    let flat_bound = 2.0;

    // keep the horizon within the staircase pipeline's life span
    let mut horizon = max_k;
    while horizon > 1 && slanted_dims(&scheme, n0, horizon).is_err() {
        horizon -= 1;
    }
    if horizon < max_k {
        println!("horizon reduced to {horizon} (staircase pipeline exhausts beyond that)");
    }

    let sfs = scheme_to_staircase_sfs(&scheme, &p0, flat_bound)?;
    let scheme_for_dims = scheme.clone();
    let base = BaseSetSequence::new(move |i| {
        let dims = slanted_dims(&scheme_for_dims, n0, i).expect("horizon checked");
        sample_flat(&FlatSpec::bounded(dims[i], flat_bound), 1, seed ^ (i as u64))
    });
    let reports = sfs_certification(&sfs, &base, tol, horizon)?;

    ensure_out(&out)?;
    let mut csv = String::from("grouping,k,s_k,product,tail_bound\n");
    for report in &reports {
        println!(
            "grouping {} (diameter {:.4}{})",
            report.grouping,
            report.diameter,
            if report.empirical_domain { ", empirical" } else { "" }
        );
        println!("    k  s_k            prod s_i       tail bound");
        for row in &report.rows {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                report.grouping, row.k, row.s_k, row.product, row.tail_bound
            ));
            println!(
                "{:>5}  {:<13.6e}  {:<13.6e}  {:<13.6e}",
                row.k, row.s_k, row.product, row.tail_bound
            );
        }
        match report.certified_at {
            Some(k) => println!(
                "certified at grouped step {k} (tail bound {:.3e})",
                report.certificate.tail_bound
            ),
            None => println!(
                "not certified at this grouping{}",
                if report.certificate.conservative {
                    " (series truncation inconclusive)"
                } else {
                    ""
                }
            ),
        }
    }
    write_text(&out, "certify.csv", &csv)?;
    match reports.iter().find(|r| r.certified_at.is_some()) {
        Some(r) => println!("grouping level used: {}", r.grouping),
        None => println!("no grouping in {{1, 2, 4, 8}} certified within the horizon"),
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Attractor(args) => cmd_attractor(args),
        Command::Subdivide(args) => cmd_subdivide(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Certify(args) => cmd_certify(args),
    }
}
