//! Marginals and conditionals of an MTP2 distribution stay MTP2, while a
//! mixture of two such distributions generally does not.

use mtp2::ising::table_from_params;
use mtp2::tables::{is_mtp2, DEFAULT_MTP2_TOL};
use mtp2::{IsingParams, ProbTable};

fn main() -> mtp2::Result<()> {
    let theta = IsingParams::from_interactions(4, &[(0, 1, 0.8), (1, 2, 0.3), (2, 3, 0.5), (0, 2, 0.2)])?;
    let p = table_from_params(&theta)?;
    println!("p MTP2: {}", is_mtp2(&p, DEFAULT_MTP2_TOL).holds);
    println!("marginal (X1, X3, X4) MTP2: {}", is_mtp2(&p.marginal(&[0, 2, 3])?, DEFAULT_MTP2_TOL).holds);
    println!("conditional given X2 = -1 MTP2: {}", is_mtp2(&p.conditional(&[(1, -1)])?, DEFAULT_MTP2_TOL).holds);

    // point masses at (1,-1) and (-1,1) are trivially MTP2; their mixture is not
    let a = ProbTable::new(2, vec![0.0, 1.0, 0.0, 0.0])?;
    let b = ProbTable::new(2, vec![0.0, 0.0, 1.0, 0.0])?;
    let mix: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| 0.5 * (x + y)).collect();
    let check = is_mtp2(&ProbTable::new(2, mix)?, DEFAULT_MTP2_TOL);
    println!("mixture MTP2: {} ({} violation)", check.holds, check.violations.len());
    Ok(())
}
