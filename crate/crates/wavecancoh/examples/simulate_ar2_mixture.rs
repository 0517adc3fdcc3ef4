//! Generate the two-group AR(2) mixture: five narrowband latent sources
//! per group, a shared top-band source during the first half only, and a
//! regime switch in the mixing at mid-record.
//!
//!     cargo run --release --example simulate_ar2_mixture

use wavecancoh::simulate::{ar2_coefficients, simulate_ar2_mixture, Ar2MixtureSpec};

fn main() -> wavecancoh::Result<()> {
    let spec = Ar2MixtureSpec::builtin();
    let (p, q) = spec.group_sizes();

    println!("latent bands (fs = {} Hz):", spec.fs);
    for (k, (&eta, &s)) in spec.eta.iter().zip(&spec.sharp).enumerate() {
        let (phi1, phi2) = ar2_coefficients(eta, s)?;
        println!(
            "  component {}: peak {:5.1} Hz  (phi1 = {phi1:+.4}, phi2 = {phi2:+.4})",
            k + 1,
            eta * spec.fs
        );
    }
    println!(
        "shared top band in the first half: alpha = {}, beta = {}",
        spec.alpha, spec.beta
    );

    let len = 1024;
    let (x, y) = simulate_ar2_mixture(&spec, len, 42)?;
    println!("\nsimulated X: {} channels, Y: {} channels, {len} samples", p, q);

    // first-half vs second-half correlation between the two lead channels
    let half = len / 2;
    let corr = |range: std::ops::Range<usize>| -> f64 {
        let n = range.len() as f64;
        let (mx, my) = range.clone().fold((0.0, 0.0), |a, t| {
            (a.0 + x.get(t, 0) / n, a.1 + y.get(t, 0) / n)
        });
        let (mut cxy, mut cxx, mut cyy) = (0.0, 0.0, 0.0);
        for t in range {
            let dx = x.get(t, 0) - mx;
            let dy = y.get(t, 0) - my;
            cxy += dx * dy;
            cxx += dx * dx;
            cyy += dy * dy;
        }
        cxy / (cxx * cyy).sqrt()
    };
    println!("lead-channel correlation, first half:  {:+.3}", corr(0..half));
    println!("lead-channel correlation, second half: {:+.3}", corr(half..len));
    Ok(())
}
