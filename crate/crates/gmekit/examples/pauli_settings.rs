//! Decompose the reference witness into Pauli words and group them into
//! simultaneously measurable settings: one all-Z setting covers the sixteen
//! I/Z rows, and each X/Y row needs its own basis, for 17 settings total.

use gmekit::pauli;
use gmekit::witness::reference_witness;

fn main() -> anyhow::Result<()> {
    let w = reference_witness();
    let rows = pauli::pauli_coefficients(&w.w)?;
    println!("64 * W = sum of m * (Pauli word) over {} rows:", rows.len());
    for row in &rows {
        println!("  {}  m = {:+.6}", row.word, row.weight);
    }

    let words: Vec<String> = rows.iter().map(|r| r.word.clone()).collect();
    let settings = pauli::group_settings(&words)?;
    println!("\n{} measurement settings:", settings.len());
    for s in &settings {
        println!("  basis {}  reads {} row(s)", s.basis, s.members.len());
    }
    Ok(())
}
