//! The vector complexity of a product class is the sum of the scalar
//! complexities of its coordinates.

use nalgebra::DMatrix;
use radcomplex::contraction::product_identity_check;
use radcomplex::{ExpectationEngine, FunctionClass};

fn column(values: &[f64]) -> DMatrix<f64> {
    DMatrix::from_column_slice(values.len(), 1, values)
}

fn main() -> radcomplex::Result<()> {
    let components = vec![
        FunctionClass::from_tables(vec![column(&[1.0, 0.0, -1.0]), column(&[-1.0, 0.0, 1.0])])?,
        FunctionClass::from_tables(vec![column(&[0.5, 0.5, 0.5]), column(&[0.0, 1.0, 0.0]), column(&[0.2, -0.3, 0.9])])?,
        FunctionClass::from_tables(vec![column(&[0.3, 0.1, 0.4])])?,
    ];
    let r = product_identity_check(&components, &ExpectationEngine::exact())?;
    for (i, c) in r.components.iter().enumerate() {
        println!("component {i}: {:.6}", c.mean);
    }
    println!("sum {:.6}, product {:.6}, difference {:.1e} (holds: {})", r.sum, r.product.mean, r.difference, r.holds());

    let product = FunctionClass::product(components)?;
    println!("the product class has {} members", product.cardinality().unwrap_or(0));
    Ok(())
}
