//! Build the constituent mixture, inspect its weights and purity, and show
//! that the single-copy state is NPT across every bipartition.

use gmekit::linalg::{self, DensityMatrix};
use gmekit::states::{self, ConstituentSet, MixtureSpec, N_CONSTITUENTS};

fn min_pt_eigenvalue(rho: &DensityMatrix, subset: &[usize]) -> f64 {
    let pt = rho.partial_transpose(subset).expect("valid subset");
    linalg::min_eig(&pt).expect("hermitian")
}

fn main() -> anyhow::Result<()> {
    let constituents = ConstituentSet::standard();
    for q in [0.0, 0.06] {
        let spec = MixtureSpec::new(q)?;
        println!("q = {q}");
        for i in 0..N_CONSTITUENTS {
            println!(
                "  constituent {i}: weight {:.5}, separable across {:?}",
                spec.weights[i],
                constituents.label(i)
            );
        }

        let rho = states::single_copy_state(q)?;
        println!("  purity Tr[rho^2] = {:.6}", rho.purity());
        for (name, subset) in [("A|BC", vec![0]), ("B|AC", vec![1]), ("C|AB", vec![2])] {
            println!(
                "  min eig of partial transpose across {name}: {:+.6}",
                min_pt_eigenvalue(&rho, &subset)
            );
        }

        let rho2 = states::n_copy_state(q, 2)?;
        println!(
            "  two-copy register: {} qubits, purity {:.6}",
            rho2.n_qubits(),
            rho2.purity()
        );
        println!();
    }
    Ok(())
}
