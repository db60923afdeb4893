//! Times one right-hand-side evaluation on a structured cube mesh.
//!
//! Usage: `cargo run --release --example rhs_timing -- [n] [first degree]`

use std::time::Instant;

use maxwell_dg::dg_operator::{DgOperator, FieldState, SourceSpec};
use maxwell_dg::mesh::{build_structured_cube_mesh, FaceKind, Material};
use maxwell_dg::reference_element::{ReferenceElement, MAX_SOLVER_DEGREE};

fn arg(i: usize, default: usize) -> usize {
    std::env::args().nth(i).map_or(default, |a| a.parse().expect("integer argument"))
}

fn main() -> maxwell_dg::Result<()> {
    let mesh = build_structured_cube_mesh(arg(1, 10), 1.0, Material::VACUUM, |_| FaceKind::Abc)?;
    for k in arg(2, 1)..=MAX_SOLVER_DEGREE {
        let reference = ReferenceElement::new(k)?;
        let op = DgOperator::new(&mesh, &reference, SourceSpec::default());
        let mut state = FieldState::zeros(mesh.num_elements(), reference.np());
        state
            .data_mut()
            .iter_mut()
            .enumerate()
            .for_each(|(i, v)| *v = (i as f64 * 0.37).sin());
        let reps = 5;
        let start = Instant::now();
        for _ in 0..reps {
            std::hint::black_box(op.apply_rhs(&state, 0.0));
        }
        let per = start.elapsed().as_secs_f64() / reps as f64;
        println!(
            "k={k}: {} elements, {:.1} ms per evaluation ({:.2} us per element)",
            mesh.num_elements(),
            per * 1e3,
            per * 1e6 / mesh.num_elements() as f64
        );
    }
    Ok(())
}
