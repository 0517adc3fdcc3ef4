//! Inspect a discrete non-decimated wavelet system: filters, wavelet
//! supports, autocorrelation sequences, the Gram matrix and the
//! scale-to-frequency-band mapping.
//!
//!     cargo run --release --example wavelet_system

use wavecancoh::wavelets::{build_system, scale_to_band};

fn main() -> wavecancoh::Result<()> {
    for family in ["haar", "d4"] {
        let system = build_system(family, 5)?;
        let filter = system.filter();
        println!("family {family}: lowpass {:?}", filter.lowpass);
        println!("  scale  support  acw(0)  acw(1)   band at fs=1000 Hz");
        for j in 1..=5 {
            let psi = system.wavelet(j)?;
            let acw = system.autocorrelation(j)?;
            let (lo, hi) = scale_to_band(j, 1000.0);
            println!(
                "  {j:>5}  {:>7}  {:.4}  {:+.4}   [{lo}, {hi}]",
                psi.len(),
                acw[0],
                acw[1]
            );
        }
        println!("  Gram matrix:");
        for j in 0..5 {
            let row: Vec<String> = (0..5)
                .map(|l| format!("{:7.4}", system.gram()[(j, l)]))
                .collect();
            println!("    {}", row.join(" "));
        }
        println!();
    }
    Ok(())
}
