//! Run the iterative product-state subtraction certifier on the single-copy
//! mixture and print the purity path. The mixture sits on the biseparable
//! boundary, so expect the subtraction to stall above the 1/7 fully-
//! separable threshold rather than certify; a noisy interior state makes a
//! useful contrast.

use gmekit::bisep::{self, CertifierConfig, Verdict};
use gmekit::linalg::DensityMatrix;
use gmekit::states;

fn run(tag: &str, rho: &DensityMatrix) -> anyhow::Result<()> {
    let cfg = CertifierConfig::default();
    let trace = bisep::certify(rho, &cfg)?;
    println!("{tag}: start purity {:.6}", rho.purity());
    for (j, rec) in trace.records.iter().enumerate() {
        println!(
            "  iter {j:3}: purity {:.6} -> {:.6}, eps = {:.4e}{}",
            rec.purity_before,
            rec.purity_after,
            rec.epsilon,
            if rec.stalled { " (stalled)" } else { "" }
        );
        if j >= 9 && trace.records.len() > 12 {
            println!("  … {} more iterations", trace.records.len() - j - 1);
            break;
        }
    }
    let verdict = match trace.verdict {
        Verdict::Biseparable => "biseparable",
        Verdict::Inconclusive => "inconclusive",
    };
    println!(
        "  verdict: {verdict} (final purity {:.6}, threshold {:.6})\n",
        trace.final_purity, trace.purity_threshold
    );
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run("single-copy mixture, q = 0.06", &states::single_copy_state(0.06)?)?;

    // a deep-interior state: heavy white-noise admixture drops the purity
    // below 1/7 immediately, so the certifier should conclude at once
    let rho = states::single_copy_state(0.06)?;
    let mixed = rho.mix_with_white_noise(0.8)?;
    run("same state mixed with 80% white noise", &mixed)?;
    Ok(())
}
