// Temporary exploration harness (deleted before release).
use gateforge::gates::{synthesize_ns_family, NsFamily};

fn main() {
    let phi = std::f64::consts::PI;
    for seeds in [8usize, 16, 32] {
        let t0 = std::time::Instant::now();
        let b = synthesize_ns_family(phi, seeds, NsFamily::SingleAncillaPhoton);
        match b {
            Ok(s) => println!(
                "single-photon family, {} seeds: success {:.12}, residual {:.2e}, {:?}",
                seeds,
                s.result.success_probability,
                s.result.residual_norm,
                t0.elapsed()
            ),
            Err(e) => println!("seeds {seeds}: {e}"),
        }
    }
}
