//! The Lipschitz loss catalog, textual loss specs, and an empirical Lipschitz
//! constant from a table of values.

use radcomplex::lipschitz::empirical_lipschitz;
use radcomplex::LipschitzLoss;

fn main() -> radcomplex::Result<()> {
    let u = [2.0, 0.0, -1.0];
    for spec in ["norm", "max", "min", "coord:2", "dist:1,1,1", "margin:0:0.5", "scale:3:norm", "clamp:norm"] {
        let h = LipschitzLoss::parse(spec)?;
        println!("{spec:<14} L = {:<6.4} h({u:?}) = {:.4}", h.lipschitz(), h.eval(&u)?);
    }

    let custom = LipschitzLoss::custom(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 2.0]], vec![0.0, 0.5, 1.0])?;
    println!("\ncustom table loss: L = {:.4}, h(0.5, 0.5) = {:.4}", custom.lipschitz(), custom.eval(&[0.5, 0.5])?);

    let psi = [0.0, 1.0, 0.5];
    let phi = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 0.0]];
    println!("empirical Lipschitz constant of ψ over φ: {:.4}", empirical_lipschitz(&psi, &phi)?);
    Ok(())
}
