use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use dsmetric::am::{am_distance, AmMode};
use dsmetric::cantor::{best_matching_lower_bound, cantor_match, conjugating_pair};
use dsmetric::discretize::finite_relation_approx;
use dsmetric::io::{self, fmt_real, RelationDoc};
use dsmetric::metric::{hausdorff_distance, hausdorff_points, HausdorffWitness};
use dsmetric::pipelines::{self, fixtures};
use dsmetric::quotient::{dgh_bracket, euclidean_dgh};
use dsmetric::relation::ds_distance;
use dsmetric::sft::{embed_cylinders, shift_fiber_profile};
use dsmetric::{DynamicalRelation, SubsetIndex};

use crate::{Command, DocKind, Fixture};

/// Bad flag combinations or values that the library does not see.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub enum Outcome {
    Complete,
    /// A budget ran out; the emitted result is flagged as partial.
    Partial,
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    if let Some(path) = path {
        let text = io::to_json(value)?;
        fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

/// Aligned two-column table on standard output.
fn table(rows: &[(&str, String)]) {
    let width = rows.iter().map(|r| r.0.chars().count()).max().unwrap_or(0);
    for (k, v) in rows {
        println!("{k:<width$}  {v}");
    }
}

fn pair_str(p: (usize, usize)) -> String {
    format!("({}, {})", p.0, p.1)
}

fn load_pair(f: &Path, g: &Path) -> Result<(DynamicalRelation, DynamicalRelation)> {
    Ok((io::load_relation(f)?, io::load_relation(g)?))
}

pub fn run(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::Validate { input, kind } => validate(&input, kind),
        Command::Hausdorff { space, a, b, x, y, out } => {
            let w: HausdorffWitness = match (space, x, y) {
                (Some(space), _, _) => {
                    let s = io::load_space(&space)?.into_arc();
                    let a = SubsetIndex::new(s.clone(), a)?;
                    let b = SubsetIndex::new(s, b)?;
                    hausdorff_distance(&a, &b)?
                }
                (None, Some(x), Some(y)) => {
                    let points = |p: &Path| -> Result<Vec<Vec<f64>>> {
                        let s = io::load_space(p)?;
                        if !s.is_euclidean() {
                            return Err(usage(format!("{} is not a Euclidean point set", p.display())));
                        }
                        Ok((0..s.len()).map(|i| s.coords(i).unwrap_or_default().to_vec()).collect())
                    };
                    let (px, py) = (points(&x)?, points(&y)?);
                    if px[0].len() != py[0].len() {
                        return Err(usage("point sets have different dimensions"));
                    }
                    hausdorff_points(&px, &py)
                }
                _ => return Err(usage("give --space with --a/--b, or --x and --y")),
            };
            table(&[("hausdorff", fmt_real(w.value))]);
            write_json(out.out.as_deref(), &w)?;
            Ok(Outcome::Complete)
        }
        Command::Ds { pair, out } => {
            let (f, g) = load_pair(&pair.f, &pair.g)?;
            let w = ds_distance(&f, &g)?;
            println!("{}", fmt_real(w.value));
            table(&[("from", pair_str(w.from)), ("to", pair_str(w.to)), ("direction", w.direction.to_string())]);
            write_json(out.out.as_deref(), &w)?;
            Ok(Outcome::Complete)
        }
        Command::Discretize { input, eps, out, certificate } => {
            let f = io::load_relation(&input)?;
            let approx = finite_relation_approx(&f, eps)?;
            table(&[
                ("eps", fmt_real(eps)),
                ("net points", approx.net.len().to_string()),
                ("pairs", approx.relation.len().to_string()),
                ("distance", fmt_real(approx.distance.value)),
            ]);
            write_json(out.as_deref(), &RelationDoc::new(&approx.relation))?;
            write_json(certificate.as_deref(), &approx.summary())?;
            Ok(Outcome::Complete)
        }
        Command::Sft { input, depth, bits, eps, budget, out } => {
            let g = io::load_relation(&input)?;
            let e = embed_cylinders(&g, depth, eps, bits, budget)?;
            let (forward, backward) = shift_fiber_profile(&e);
            table(&[
                ("symbols", e.transition.len().to_string()),
                ("words", e.words.len().to_string()),
                ("cylinders", e.cylinders.len().to_string()),
                ("distance", fmt_real(e.certificate.value)),
                ("fiber diameter", fmt_real(forward)),
                ("inverse fiber diameter", fmt_real(backward)),
            ]);
            let points: Vec<Value> = e
                .cylinders
                .iter()
                .enumerate()
                .map(|(c, cyl)| json!({ "cylinder": cyl, "point": e.point(c), "coords": e.space.coords(e.point(c)) }))
                .collect();
            let doc = json!({
                "depth": e.depth,
                "bits": e.bits,
                "eps": e.eps,
                "spread": e.spread,
                "transition": e.transition,
                "words": e.words,
                "points": points,
                "relation": RelationDoc::new(&e.relation),
                "source_pairs": e.source.pairs(),
                "certificate": e.certificate,
                "fiber_diameter": forward,
                "inverse_fiber_diameter": backward,
            });
            write_json(out.out.as_deref(), &doc)?;
            Ok(Outcome::Complete)
        }
        Command::CantorMatch { a, b, delta, out } => {
            let (ta, tb) = (io::load_tree(&a)?, io::load_tree(&b)?);
            let r = cantor_match(&ta, &tb, delta)?;
            let lower = best_matching_lower_bound(&ta, &tb)?;
            table(&[
                ("leaves", ta.leaf_count().to_string()),
                ("hausdorff", fmt_real(r.trace.rho)),
                ("displacement", fmt_real(r.matching.displacement)),
                ("best lower bound", fmt_real(lower)),
            ]);
            let pairs: Vec<(usize, usize)> = r.matching.map.iter().copied().enumerate().collect();
            let doc = json!({
                "pairs": pairs,
                "displacement": r.matching.displacement,
                "hausdorff": r.trace.rho,
                "lower_bound": lower,
                "trace": r.trace,
            });
            write_json(out.out.as_deref(), &doc)?;
            Ok(Outcome::Complete)
        }
        Command::ConjugatePair { a, b, delta, out } => {
            let (ta, g) = io::load_tree_system(&a)?;
            let (tb, j) = io::load_tree_system(&b)?;
            let p = conjugating_pair(&ta, &g, &tb, &j, delta)?;
            table(&[
                ("distance", fmt_real(p.distance)),
                ("displacement h1", fmt_real(p.displacement_h1)),
                ("displacement h2", fmt_real(p.displacement_h2)),
                ("method", p.method.to_string()),
            ]);
            write_json(out.out.as_deref(), &p)?;
            Ok(Outcome::Complete)
        }
        Command::Dgh { pair, euclidean, budget, out } => {
            let (f, g) = load_pair(&pair.f, &pair.g)?;
            let bracket = dgh_bracket(&f, &g, budget)?;
            let lower = bracket.lower.value;
            let (doc, complete) = if euclidean {
                let r = euclidean_dgh(&f, &g, budget)?;
                let exact = lower >= r.value - dsmetric::TAU_CMP;
                table(&[("lower", fmt_real(lower)), ("upper", fmt_real(r.value)), ("exact", exact.to_string())]);
                let doc = json!({
                    "lower": lower,
                    "upper": r.value,
                    "exact": exact,
                    "complete": r.complete,
                    "witness": { "kind": "rigid_motion", "motion": r.motion, "witness": r.witness },
                    "lower_detail": bracket.lower,
                    "evaluations": r.evaluations,
                });
                (doc, r.complete)
            } else {
                let u = &bracket.upper;
                table(&[
                    ("lower", fmt_real(lower)),
                    ("upper", fmt_real(u.value)),
                    ("exact", bracket.exact.to_string()),
                    ("conjugate", u.conjugate.to_string()),
                ]);
                let doc = json!({
                    "lower": lower,
                    "upper": u.value,
                    "exact": bracket.exact,
                    "complete": u.complete,
                    "conjugate": u.conjugate,
                    "witness": u.witness,
                    "lower_detail": bracket.lower,
                    "explored": u.explored,
                });
                (doc, u.complete)
            };
            write_json(out.out.as_deref(), &doc)?;
            Ok(if complete { Outcome::Complete } else { Outcome::Partial })
        }
        Command::Am { pair, budget, out } => {
            let (f, g) = load_pair(&pair.f, &pair.g)?;
            let r = am_distance(&f, &g, budget)?;
            let mode = match r.mode {
                AmMode::Exact => "exact",
                AmMode::Heuristic => "heuristic",
            };
            table(&[("value", fmt_real(r.value)), ("mode", mode.to_string())]);
            let doc = json!({
                "value": r.value,
                "mode": r.mode,
                "phi": r.phi.map,
                "psi": r.psi.map,
                "phi_report": r.phi,
                "psi_report": r.psi,
                "explored": r.explored,
            });
            write_json(out.out.as_deref(), &doc)?;
            Ok(if r.mode == AmMode::Exact { Outcome::Complete } else { Outcome::Partial })
        }
        Command::ManifoldApprox { input, fixture, size, steps, eps, depth, bits, out } => {
            let m = match (input, fixture) {
                (Some(path), _) => io::load_manifold(&path)?,
                (None, Some(Fixture::Circle)) => fixtures::circle_rotation(size.unwrap_or(100), steps),
                (None, Some(Fixture::Torus)) => fixtures::torus_cat_map(size.unwrap_or(32)),
                (None, None) => return Err(usage("give --input or --fixture")),
            };
            let r = pipelines::manifold_cantor_approx(&m, eps, depth, bits)?;
            let c = &r.certificate;
            table(&[
                ("eps", fmt_real(c.eps)),
                ("delta", fmt_real(c.delta)),
                ("density", fmt_real(c.density)),
                ("closeness", fmt_real(c.closeness)),
                ("distance", fmt_real(c.distance)),
                ("points", c.points.to_string()),
                ("pairs", c.pairs.to_string()),
            ]);
            let doc = json!({
                "certificate": c,
                "grid_len": r.grid_len,
                "relation": RelationDoc::new(&r.relation),
            });
            write_json(out.out.as_deref(), &doc)?;
            Ok(Outcome::Complete)
        }
        Command::RegressPower { ns, grid, out } => {
            if ns.contains(&0) || grid < 2 {
                return Err(usage("exponents must be positive and the grid needs two points"));
            }
            let rows = pipelines::power_map_regression(&ns, grid);
            println!("{:>6}  distance", "n");
            for r in &rows {
                println!("{:>6}  {}", r.n, fmt_real(r.distance));
            }
            write_json(out.out.as_deref(), &json!({ "grid": grid, "rows": rows }))?;
            Ok(Outcome::Complete)
        }
        Command::Diagnose { input, eps, scales, out } => {
            let f = io::load_relation(&input)?;
            let rep = pipelines::genericity_report(&f, &eps, &scales)?;
            table(&[
                ("fiber diameter", fmt_real(rep.fiber_diameter)),
                ("inverse fiber diameter", fmt_real(rep.inverse_fiber_diameter)),
            ]);
            for c in &rep.components {
                println!("components at r = {}: {} (mesh {})", fmt_real(c.scale), c.components, fmt_real(c.mesh));
            }
            for i in &rep.isolated {
                println!("isolated at eps = {}: {:?}", fmt_real(i.eps), i.points);
            }
            write_json(out.out.as_deref(), &rep)?;
            Ok(Outcome::Complete)
        }
    }
}

fn guess_kind(path: &Path) -> Result<DocKind> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| io::IoError::Schema { path: path.display().to_string(), message: e.to_string() })?;
    let has = |k: &str| v.get(k).is_some();
    Ok(if has("modulus") {
        DocKind::Manifold
    } else if has("pairs") {
        DocKind::Relation
    } else if has("tree") {
        DocKind::TreeSystem
    } else if has("rep") || has("root") {
        DocKind::Tree
    } else {
        DocKind::Space
    })
}

fn validate(path: &Path, kind: Option<DocKind>) -> Result<Outcome> {
    let kind = match kind {
        Some(k) => k,
        None => guess_kind(path)?,
    };
    let summary = match kind {
        DocKind::Space => {
            let s = io::load_space(path)?;
            format!("metric space with {} points, diameter {}", s.len(), fmt_real(s.diameter()))
        }
        DocKind::Relation => {
            let r = io::load_relation(path)?;
            format!("relation with {} pairs on {} carrier points ({:?})", r.len(), r.carrier().len(), r.classify())
        }
        DocKind::Tree => {
            let t = io::load_tree(path)?;
            format!("tree of height {} with {} leaves", t.height(), t.leaf_count())
        }
        DocKind::TreeSystem => {
            let (t, _) = io::load_tree_system(path)?;
            format!("leaf bijection on a tree with {} leaves", t.leaf_count())
        }
        DocKind::Manifold => {
            let m = io::load_manifold(path)?;
            format!("sampled map on {} grid points, resolution {}", m.map.len(), fmt_real(m.resolution()))
        }
    };
    println!("valid: {summary}");
    Ok(Outcome::Complete)
}
