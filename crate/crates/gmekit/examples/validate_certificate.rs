//! Run every certificate check on the built-in reference witness, then show
//! how the checks catch the broken variant tabulation that swaps one
//! diagonal entry.

use gmekit::witness::{self, reference_witness, reference_witness_variant, Witness};

fn print_report(tag: &str, w: &Witness) {
    let report = witness::validate_certificate(w);
    println!("{tag}:");
    for check in &report.checks {
        println!(
            "  [{}] {:<22} {}",
            if check.pass { "ok" } else { "FAIL" },
            check.name,
            check.detail
        );
    }
    println!("  => all_pass = {}\n", report.all_pass());
}

fn main() -> anyhow::Result<()> {
    let good = reference_witness();
    print_report("reference witness", &good);

    // same certificates, but the witness matrix with the swapped diagonal
    // entry: the decomposition checks must flag every cut
    let bad = Witness {
        w: reference_witness_variant(),
        certificates: good.certificates.clone(),
        value: None,
    };
    print_report("variant tabulation (known bad)", &bad);

    let diffs = witness::diff_entries(&good.w, &bad.w, 1e-12);
    println!("entrywise differences between the two tabulations:");
    for (r, c, a, b) in diffs {
        println!("  ({r:2}, {c:2}): {a:+.6} vs {b:+.6}");
    }
    Ok(())
}
