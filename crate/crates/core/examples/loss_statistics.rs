//! Summary statistics of ten test losses from a solver/width grid, and
//! the lagged correlation between train and test losses.

use debris_edge::experiments::{lagged_correlation, loss_stats};

const TEST_LOSS: [f64; 10] = [
    0.177537, 0.181777, 0.177506, 0.188233, 0.180881, 0.171767, 0.174148, 0.172995, 0.175724, 0.179366,
];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = loss_stats(&TEST_LOSS)?;
    println!("mean   {:.6}", s.mean);
    println!("median {:.6}", s.median);
    println!("sd     {:.6}", s.sd);
    println!("min    {:.6}  max {:.6}  range {:.6}", s.min, s.max, s.range);
    println!("(mean-min)/sd {:.6}", s.spread.unwrap_or(f64::NAN));

    // A stand-in train series: test loss with a one-step lead.
    let train: Vec<f64> = TEST_LOSS.iter().cycle().skip(1).take(TEST_LOSS.len()).map(|v| v - 0.01).collect();
    for c in lagged_correlation(&train, &TEST_LOSS, 3)? {
        match c.correlation {
            Some(r) => println!("lag {:>2}: {r:+.3}", c.lag),
            None => println!("lag {:>2}: undefined", c.lag),
        }
    }
    Ok(())
}
