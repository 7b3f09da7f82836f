//! One test per acceptance criterion. Each suite check is matched against a
//! bound pinned here, so loosening a bound in the suite fails the test.

use std::process::Command;
use std::time::{Duration, Instant};

use cartan_cli::suite::{self, Criterion, Relation};

const SEED: u64 = 0;

struct Pinned {
    name: &'static str,
    relation: Relation,
    bound: f64,
}

const fn at_most(name: &'static str, bound: f64) -> Pinned {
    Pinned { name, relation: Relation::AtMost, bound }
}

const fn at_least(name: &'static str, bound: f64) -> Pinned {
    Pinned { name, relation: Relation::AtLeast, bound }
}

fn run(id: u8, budget: Option<Duration>, pinned: &[Pinned]) {
    let start = Instant::now();
    let c: Criterion = suite::criterion(id, SEED);
    let elapsed = start.elapsed();
    println!("{}", c.line());
    println!("criterion {id} runtime {:.3} s", elapsed.as_secs_f64());
    assert!(c.error.is_none(), "criterion {id} errored: {:?}", c.error);
    assert_eq!(c.checks.len(), pinned.len(), "criterion {id} check count");
    for p in pinned {
        let check = c.check(p.name).unwrap_or_else(|| panic!("criterion {id}: no check {:?}", p.name));
        assert_eq!(check.relation, p.relation, "{}", p.name);
        assert_eq!(check.bound, p.bound, "{}: bound drifted from the pinned value", p.name);
        let ok = match p.relation {
            Relation::AtMost => check.value <= p.bound,
            Relation::AtLeast => check.value >= p.bound,
        };
        assert!(ok, "criterion {id}: {} = {:e} against {:e}", p.name, check.value, p.bound);
    }
    assert!(c.passed());
    if let Some(budget) = budget {
        assert!(elapsed <= budget, "criterion {id} took {elapsed:?}, budget {budget:?}");
    }
}

#[test]
fn criterion_01_hypersurface_frame_direction() {
    run(1, Some(Duration::from_secs(1)), &[at_most("max |v x (p,q,-1)| / norms", 1e-12)]);
}

#[test]
fn criterion_02_four_dimensional_closed_form_and_coincidence() {
    run(
        2,
        Some(Duration::from_secs(1)),
        &[
            at_most("max componentwise relative error", 1e-12),
            at_least("min singular-value gap s2/s3 on coincidence locus", 1e8),
        ],
    );
}

#[test]
fn criterion_03_boundary_identity_for_all_builtins() {
    run(
        3,
        Some(Duration::from_secs(2)),
        &[
            at_most("max relative residual area_hypersurface", 1e-10),
            at_most("max relative residual area_paper_4d", 1e-10),
            at_most("max relative residual area_graph_gram", 1e-10),
            at_most("max relative residual dirichlet", 1e-10),
            at_least("median residual for random X", 1e-2),
        ],
    );
}

#[test]
fn criterion_04_plane_patch_oracle() {
    run(
        4,
        Some(Duration::from_secs(30)),
        &[
            at_most("max |dA/dt| / A0 over 10 frame deformations", 1e-6),
            at_most("edge translation |dA/dt - 1|", 1e-3),
        ],
    );
}

#[test]
fn criterion_05_scherk_patch_oracle() {
    run(
        5,
        Some(Duration::from_secs(120)),
        &[
            at_most("max |dA/dt| / A0 over 3 frame deformations", 1e-5),
            at_least("frame deformations classified normal", 3.0),
            at_least("tangential deformation classified non-normal", 1.0),
        ],
    );
}

#[test]
fn criterion_06_formula_matches_oracle() {
    run(
        6,
        None,
        &[at_most("plane cases max gap / tolerance", 1.0), at_most("Scherk cases max gap / tolerance", 1.0)],
    );
}

#[test]
fn criterion_07_solver_orders() {
    run(
        7,
        None,
        &[
            at_least("harmonic x^2-y^2 residual order", 1.8),
            at_least("Scherk residual order", 1.8),
            at_least("Scherk solution error order", 1.8),
        ],
    );
}

#[test]
fn criterion_08_homogenized_normals_and_surface_element() {
    run(
        8,
        None,
        &[
            at_most("max |F - |xi|| / |xi|", 1e-12),
            at_most("max homogeneity gap (relative)", 1e-12),
            at_most("max Euler identity gap (relative)", 1e-12),
            at_most("max |<l^i, l_i> - 1|", 1e-12),
            at_most("max surface element vs bordered determinant (relative)", 1e-10),
            at_most("max |d sigma| vs |xi_1 x xi_2| (relative)", 1e-10),
            at_most("max |Hess(F^2/2) - I|", 1e-12),
        ],
    );
}

#[test]
fn criterion_09_gram_volumes() {
    run(
        9,
        None,
        &[
            at_most("max |V - |det|| relative to the Hadamard bound", 1e-12),
            at_most("max factorization gap (relative)", 1e-10),
        ],
    );
}

#[test]
fn criterion_10_repeated_runs_are_bit_identical() {
    let invoke = || {
        std::thread::spawn(|| {
            Command::new(env!("CARGO_BIN_EXE_cartan"))
                .args(["acceptance", "--seed", "0"])
                .output()
                .expect("run cartan")
        })
    };
    let (a, b) = (invoke(), invoke());
    let (a, b) = (a.join().unwrap(), b.join().unwrap());
    let text = String::from_utf8(a.stdout.clone()).unwrap();
    println!("{text}");
    let lines = text.lines().filter(|l| l.starts_with("criterion ")).count();
    assert_eq!(lines, 9, "summary must list criteria 1-9");
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout, "summaries differ between runs");
    assert_eq!(a.status.code(), b.status.code());
}
