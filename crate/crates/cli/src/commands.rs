//! One report builder per subcommand.

use faer::Mat;
use hodgecurl_core::curlcurl::{
    assemble_curlcurl, curlcurl_spectrum, dirichlet_mismatch_demo, square_check, CurlCurlBc, MismatchReport,
};
use hodgecurl_core::homology::{betti, intersection_matrix, CycleClass, VolumeCohomology};
use hodgecurl_core::hodge::rotation_defect;
use hodgecurl_core::meshgen::{self, HexSplit};
use hodgecurl_core::spectral::{
    pm_pairing_defect, restricted_operator, solve_spectrum, validate_gkn, BoundaryConditionSpec, BoundaryData,
    HarmonicSelection, RestrictedOperator, SolverMethod, SpectrumOptions, SpectrumReport, TraceClass,
};
use hodgecurl_core::symplectic::{
    is_lagrangian, isotropy_defect, lagrangian_from_partition, LagrangianVerdict, PartitionSpec,
};
use hodgecurl_core::{OrientedComplex3, TetMesh};
use serde_json::{json, Value};

use crate::checks::{self, Check, GKN_TOL};
use crate::config::{Command, Generator, MeshSource, RunConfig};
use crate::error::{CliError, EXIT_VERIFY_FAILED};
use crate::report::{num, nums, object, Sidecars, SCHEMA};

/// Random boundary cochains used for the pairing statistics.
pub const PAIRING_SAMPLES: usize = 20;

pub struct Outcome {
    pub report: Value,
    pub sidecars: Sidecars,
    /// 0, or 6 when `verify` found a failing check.
    pub exit_code: i32,
}

pub fn generate(g: &Generator) -> TetMesh {
    match *g {
        Generator::Cube { n, side } => meshgen::cube(n, side, HexSplit::Six),
        Generator::Ball { radius, refine } => meshgen::ball(meshgen::ball_cells_for_refine(refine), radius),
        Generator::SolidTorus { big_r, r, nu, nv, nw } => meshgen::solid_torus(big_r, r, nu, nv, nw),
    }
}

pub fn load_mesh(source: &MeshSource) -> Result<TetMesh, CliError> {
    match source {
        MeshSource::Generated(g) => Ok(generate(g)),
        MeshSource::File(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Input { path: path.clone(), source: e })?;
            Ok(crate::msh::parse(&text)?)
        }
    }
}

fn source_json(source: &MeshSource) -> Value {
    match source {
        MeshSource::File(p) => json!({ "kind": "file", "path": p.display().to_string() }),
        MeshSource::Generated(Generator::Cube { n, side }) => {
            json!({ "kind": "generator", "name": "cube", "n": n, "side": num(*side) })
        }
        MeshSource::Generated(Generator::Ball { radius, refine }) => {
            json!({ "kind": "generator", "name": "ball", "radius": num(*radius), "refine": refine })
        }
        MeshSource::Generated(Generator::SolidTorus { big_r, r, nu, nv, nw }) => json!({
            "kind": "generator", "name": "solid-torus",
            "R": num(*big_r), "r": num(*r), "nu": nu, "nv": nv, "nw": nw,
        }),
    }
}

fn config_json(cfg: &RunConfig) -> Value {
    json!({
        "trace": cfg.trace.as_str(),
        "partition_I": cfg.partition_i,
        "k": cfg.k,
        "zero_tol": num(cfg.zero_tol),
        "dense_threshold": cfg.dense_threshold,
        "shift": cfg.shift.map(num).unwrap_or(Value::Null),
        "seed": cfg.seed,
        "formulation": cfg.formulation.as_str(),
        "drop_symplectic_row": cfg.drop_symplectic_row,
        "demo": cfg.demo,
    })
}

pub fn mesh_json(c: &OrientedComplex3) -> Value {
    let s = &c.boundary;
    let chi = c.n_vertices() as i64 - c.n_edges() as i64 + c.n_faces() as i64 - c.n_tets() as i64;
    let chi_b = s.n_vertices() as i64 - s.n_edges() as i64 + s.n_triangles() as i64;
    let volume: f64 = (0..c.n_tets()).map(|t| c.volume(t)).sum();
    json!({
        "vertices": c.n_vertices(),
        "edges": c.n_edges(),
        "faces": c.n_faces(),
        "tets": c.n_tets(),
        "euler_characteristic": chi,
        "mesh_size": num(c.mesh_size()),
        "volume": num(volume),
        "boundary": {
            "vertices": s.n_vertices(),
            "edges": s.n_edges(),
            "triangles": s.n_triangles(),
            "components": s.n_components,
            "euler_characteristic": chi_b,
        },
    })
}

fn topology_json(c: &OrientedComplex3) -> Value {
    let b = betti(&c.boundary);
    json!({ "b0": b.b0, "b1": b.b1, "b2": b.b2, "genus": b.genus() })
}

fn partition(cfg: &RunConfig, g: usize) -> Result<PartitionSpec, CliError> {
    PartitionSpec::from_i(g, cfg.partition_i.clone()).map_err(|e| match e {
        hodgecurl_core::SymplecticError::BadPartition(m) => CliError::Partition(format!("{m} (genus {g})")),
        other => other.into(),
    })
}

fn spectrum_options(cfg: &RunConfig) -> SpectrumOptions {
    SpectrumOptions {
        k: cfg.k,
        zero_tol: cfg.zero_tol,
        dense_threshold: cfg.dense_threshold,
        shift: cfg.shift,
        seed: cfg.seed,
        formulation: cfg.formulation,
    }
}

fn class_str(c: CycleClass) -> &'static str {
    match c {
        CycleClass::InteriorBounding => "interior_bounding",
        CycleClass::ExteriorBounding => "exterior_bounding",
        CycleClass::Neither => "neither",
    }
}

fn verdict_str(v: LagrangianVerdict) -> &'static str {
    match v {
        LagrangianVerdict::No => "not_lagrangian",
        LagrangianVerdict::Lagrangian => "lagrangian",
        LagrangianVerdict::CompleteLagrangian => "complete_lagrangian",
    }
}

fn method_json(m: SolverMethod) -> Value {
    match m {
        SolverMethod::Dense => json!({ "kind": "dense" }),
        SolverMethod::ShiftInvert { shift } => json!({ "kind": "shift_invert", "shift": num(shift) }),
        SolverMethod::Lanczos => json!({ "kind": "lanczos" }),
    }
}

fn checks_json(checks: &[Check]) -> Value {
    Value::Array(checks.iter().map(Check::to_json).collect())
}

/// Runs one command. Module errors become `Err`; a failing `verify`
/// check only sets the exit code.
pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mesh = load_mesh(&cfg.mesh)?;
    let c = mesh.complex()?;
    let mut sc = Sidecars::new(cfg.sidecar.is_some());
    let mut doc = json!({
        "schema": SCHEMA,
        "command": cfg.command.as_str(),
        "source": source_json(&cfg.mesh),
        "config": config_json(cfg),
        "mesh": mesh_json(&c),
    });
    let mut exit_code = 0;
    match cfg.command {
        Command::Info => {
            let negative = c.tet_sign.iter().filter(|&&s| s < 0).count();
            doc["orientation"] = json!({
                "input_negative_tets": negative,
                "input_positive_tets": c.n_tets() - negative,
            });
            doc["checks"] = checks_json(&checks::mesh_checks(&c, &mesh));
        }
        Command::Homology => {
            doc["topology"] = topology_json(&c);
            doc["homology"] = homology_json(&c)?;
        }
        Command::Hodge => {
            let bd = BoundaryData::new(&c)?;
            doc["topology"] = topology_json(&c);
            doc["harmonic"] = harmonic_json(&bd, &mut sc);
            let stats = checks::pairing_stats(&c, &bd, PAIRING_SAMPLES, cfg.seed)?;
            doc["pairings"] = stats.to_json();
            doc["rotation_defect"] = num(rotation_defect(&bd.forms, &bd.harmonic));
        }
        Command::Basis => {
            let bd = BoundaryData::new(&c)?;
            doc["topology"] = topology_json(&c);
            doc["harmonic"] = harmonic_json(&bd, &mut sc);
            doc["lagrangians"] = lagrangians_json(&c, &bd, cfg.trace)?;
        }
        Command::Spectrum => {
            let bd = BoundaryData::new(&c)?;
            let p = partition(cfg, bd.genus())?;
            let op = operator(&c, &bd, cfg, &p)?;
            let sp = solve_spectrum(&c, &op, &spectrum_options(cfg))?;
            doc["topology"] = topology_json(&c);
            doc["harmonic"] = harmonic_json(&bd, &mut sc);
            doc["operator"] = operator_json(cfg, &p, &op);
            doc["spectrum"] = spectrum_json(&sp, &mut sc);
        }
        Command::Curlcurl => {
            let bd = BoundaryData::new(&c)?;
            let p = partition(cfg, bd.genus())?;
            let op = operator(&c, &bd, cfg, &p)?;
            doc["topology"] = topology_json(&c);
            doc["operator"] = operator_json(cfg, &p, &op);
            doc["curlcurl"] = curlcurl_json(&c, cfg)?;
            doc["square_check"] = if op.dim() > cfg.dense_threshold {
                json!({ "skipped": format!("constrained dimension {} above the dense threshold {}", op.dim(), cfg.dense_threshold) })
            } else {
                let s = square_check(&op, cfg.zero_tol)?;
                json!({
                    "lambda_squared": nums(&s.lambda_sq),
                    "squared": nums(&s.squared),
                    "squared_explicit": nums(&s.squared_explicit),
                    "zero_lambda": s.zero_lambda,
                    "zero_squared": s.zero_squared,
                    "max_rel_mismatch": num(s.max_rel_mismatch),
                    "max_rel_mismatch_explicit": num(s.max_rel_mismatch_explicit),
                })
            };
            if cfg.demo {
                doc["demo"] = demo_json(cfg)?;
            }
        }
        Command::Verify => {
            let all = verify_checks(&c, &mesh, cfg)?;
            doc["topology"] = topology_json(&c);
            doc["summary"] = checks::summary(&all);
            doc["checks"] = checks_json(&all);
            if all.iter().any(|ch| !ch.pass) {
                exit_code = EXIT_VERIFY_FAILED;
            }
        }
    }
    Ok(Outcome { report: doc, sidecars: sc, exit_code })
}

fn operator(c: &OrientedComplex3, bd: &BoundaryData, cfg: &RunConfig, p: &PartitionSpec) -> Result<RestrictedOperator, CliError> {
    let spec = BoundaryConditionSpec::partition(cfg.trace, p.clone());
    Ok(restricted_operator(c, bd, &spec, cfg.drop_symplectic_row)?)
}

/// Every check of every module on the configured mesh and boundary
/// condition.
pub fn verify_checks(c: &OrientedComplex3, mesh: &TetMesh, cfg: &RunConfig) -> Result<Vec<Check>, CliError> {
    let mut all = checks::mesh_checks(c, mesh);
    let bd = BoundaryData::new(c)?;
    let vc = VolumeCohomology::new(c);
    all.extend(checks::homology_checks(c, &bd, &vc)?);
    let stats = checks::pairing_stats(c, &bd, PAIRING_SAMPLES, cfg.seed)?;
    all.extend(checks::hodge_checks(c, &bd, &stats));
    all.extend(checks::symplectic_checks(&bd)?);
    let p = partition(cfg, bd.genus())?;
    let op = operator(c, &bd, cfg, &p)?;
    let sp = solve_spectrum(c, &op, &spectrum_options(cfg))?;
    all.extend(checks::operator_checks(c, &bd, cfg.trace, &op, &sp)?);
    all.extend(checks::curlcurl_checks(c, &op, cfg.zero_tol, cfg.dense_threshold, cfg.seed)?);
    Ok(all)
}

fn homology_json(c: &OrientedComplex3) -> Result<Value, CliError> {
    let s = &c.boundary;
    let vc = VolumeCohomology::new(c);
    let basis = hodgecurl_core::homology::canonical_dual_pairs(c, &vc)?;
    let g = basis.genus;
    let omega = intersection_matrix(s, &basis.cycles)?;
    let mut cycles = Vec::new();
    for (k, z) in basis.cycles.iter().enumerate() {
        let cls = basis.classify(c, &vc, z)?;
        let name = if k < g { format!("dS_{}", k + 1) } else { format!("dS'_{}", k - g + 1) };
        cycles.push(json!({
            "name": name,
            "edges": z.iter().filter(|&&x| x != 0).count(),
            "class": class_str(cls),
            "dual": basis.pair_index[k],
        }));
    }
    Ok(json!({
        "volume_b1": vc.b1(),
        "cycles": cycles,
        "intersection_matrix": omega,
    }))
}

fn harmonic_json(bd: &BoundaryData, sc: &mut Sidecars) -> Value {
    let b = &bd.basis;
    let g = bd.genus();
    let eye = Mat::<f64>::identity(2 * g, 2 * g);
    let j = hodgecurl_core::symplectic::canonical_j(g);
    json!({
        "dimension": bd.harmonic.dim(),
        "residual": num(hodgecurl_core::hodge::harmonic_residual(&bd.forms, &bd.harmonic)),
        "periods": sc.matrix("periods", b.periods.as_ref()),
        "gram": sc.matrix("gram", b.gram.as_ref()),
        "periods_error": num(hodgecurl_core::linalg::max_abs((&b.periods - &eye).as_ref())),
        "gram_error": num(hodgecurl_core::linalg::max_abs((&b.gram - &j).as_ref())),
        "fields": sc.matrix("harmonic_fields", b.fields.as_ref()),
    })
}

fn lagrangians_json(c: &OrientedComplex3, bd: &BoundaryData, trace: TraceClass) -> Result<Value, CliError> {
    let g = bd.genus();
    let mut out = Vec::new();
    if g == 0 {
        let (_, a) = validate_gkn(c, bd, trace, &HarmonicSelection::Partition(PartitionSpec::from_i(0, vec![])?))?;
        out.push(json!({ "I": [], "I_prime": [], "verdict": "complete_lagrangian", "isotropy": num(0.0), "asymmetry": num(a) }));
    } else {
        let space = bd.space()?;
        let eye = Mat::<f64>::identity(2 * g, 2 * g);
        for p in PartitionSpec::all(g) {
            let l = lagrangian_from_partition(eye.as_ref(), &p)?;
            let (_, a) = validate_gkn(c, bd, trace, &HarmonicSelection::Partition(p.clone()))?;
            out.push(json!({
                "I": p.i,
                "I_prime": p.i_prime,
                "verdict": verdict_str(is_lagrangian(&space, &l)?),
                "isotropy": num(isotropy_defect(&space, &l)?),
                "asymmetry": num(a),
                "certified": a <= GKN_TOL,
            }));
        }
    }
    Ok(json!({ "trace": trace.as_str(), "partitions": out }))
}

fn operator_json(cfg: &RunConfig, p: &PartitionSpec, op: &RestrictedOperator) -> Value {
    json!({
        "trace": cfg.trace.as_str(),
        "I": p.i,
        "I_prime": p.i_prime,
        "dimension": op.dim(),
        "trace_rows": op.constraints.n_trace_rows,
        "symplectic_rows": op.constraints.n_symplectic_rows(),
        "symplectic_row_dropped": cfg.drop_symplectic_row,
        "constraint_residual": num(op.space.residual),
        "gradient_directions": op.space.gradients,
        "asymmetry": num(op.asymmetry),
        "gkn_certified": op.asymmetry <= GKN_TOL,
        "gkn_tolerance": num(GKN_TOL),
    })
}

fn spectrum_json(sp: &SpectrumReport, sc: &mut Sidecars) -> Value {
    json!({
        "formulation": sp.formulation.as_str(),
        "method": method_json(sp.method),
        "dimension": sp.dimension,
        "eigenvalues": nums(&sp.eigenvalues),
        "residuals": nums(&sp.residuals),
        "max_residual": num(sp.residuals.iter().copied().fold(0.0, f64::max)),
        "gram_error": num(sp.gram_error),
        "zero_mode_count": sp.zero_mode_count,
        "zero_modes_counted": sp.zero_modes_counted,
        "spectral_radius": sp.spectral_radius.map(num).unwrap_or(Value::Null),
        "pm_pairing_defect": num(pm_pairing_defect(&sp.eigenvalues)),
        "eigenvectors": sc.matrix("eigenvectors", sp.eigenvectors.as_ref()),
    })
}

fn curlcurl_json(c: &OrientedComplex3, cfg: &RunConfig) -> Result<Value, CliError> {
    let mut out = Vec::new();
    for bc in [CurlCurlBc::Dirichlet, CurlCurlBc::Neumann] {
        let op = assemble_curlcurl(c, bc);
        if op.dim() == 0 {
            out.push((bc.as_str(), json!({ "dimension": 0 })));
            continue;
        }
        let sp = curlcurl_spectrum(&op, cfg.k, cfg.zero_tol, cfg.dense_threshold, cfg.seed)?;
        out.push((
            bc.as_str(),
            json!({
                "dimension": op.dim(),
                "eigenvalues": nums(&sp.values),
                "zero_mode_count": sp.zero_mode_count,
                "zero_modes_counted": sp.zero_modes_counted,
                "gradient_directions": op.gradients.ncols(),
                "min_relative": sp.min_relative.map(num).unwrap_or(Value::Null),
            }),
        ));
    }
    Ok(object(out))
}

fn demo_json(cfg: &RunConfig) -> Result<Value, CliError> {
    let (radius, refine) = match cfg.mesh {
        MeshSource::Generated(Generator::Ball { radius, refine }) => (radius, refine),
        _ => return Err(CliError::Config("the demo needs the ball generator".into())),
    };
    if refine < 2 {
        return Err(CliError::Config("the demo runs refine-2, refine-1 and refine; refine must be at least 2".into()));
    }
    let levels: Vec<OrientedComplex3> = (refine - 2..=refine)
        .map(|r| generate(&Generator::Ball { radius, refine: r }).complex())
        .collect::<Result<_, _>>()?;
    let rep = dirichlet_mismatch_demo(&levels, &spectrum_options(cfg))?;
    Ok(mismatch_json(&rep))
}

pub fn mismatch_json(rep: &MismatchReport) -> Value {
    let series: Vec<Value> = rep
        .series
        .iter()
        .map(|s| {
            json!({
                "name": s.name,
                "levels": s.values.iter().map(|v| nums(v)).collect::<Vec<_>>(),
                "error_bars": nums(&s.error_bars),
            })
        })
        .collect();
    let comparisons: Vec<Value> = rep
        .comparisons
        .iter()
        .map(|c| {
            json!({
                "curlcurl": c.curlcurl,
                "curl": c.curl,
                "hausdorff": num(c.hausdorff),
                "lowest_gap": num(c.lowest_gap),
                "combined_error_bar": num(c.combined_error_bar),
                "separated": c.separated,
            })
        })
        .collect();
    let asym: Vec<Value> = rep.curl_asymmetry.iter().map(|(n, a)| json!({ "trace": n, "asymmetry": num(*a) })).collect();
    json!({
        "tets": rep.tets,
        "mesh_sizes": nums(&rep.mesh_sizes),
        "series": series,
        "comparisons": comparisons,
        "curl_asymmetry": asym,
        "note": rep.note,
    })
}
