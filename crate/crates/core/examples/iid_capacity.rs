// Completion capacity of i.i.d. column models, noiseless and through a BSC,
// plus the subset conditions of the achievable region around the threshold.

use completion_lab::capacity::{achievability_check, capacity_iid, capacity_iid_noisy, EstimatorConfig};
use completion_lab::channels::Dmc;
use completion_lab::source_models::{ColumnPmf, SourceModel};
use completion_lab::WorkCaps;

fn main() -> completion_lab::Result<()> {
    let models = [
        ("product", ColumnPmf::product(2, &[vec![0.7, 0.3], vec![0.6, 0.4]])?),
        ("identical rows", ColumnPmf::identical_rows_uniform(2, 2)),
        ("correlated", ColumnPmf::new(2, 2, vec![0.4, 0.1, 0.1, 0.4])?),
    ];
    for (name, pmf) in &models {
        let r = capacity_iid(pmf)?;
        println!("{name:>15}: C = {:.6}, p* = {:.6}", r.capacity, r.threshold);
    }

    let correlated = &models[2].1;
    let noisy = capacity_iid_noisy(correlated, &Dmc::bsc(0.1)?)?;
    println!(
        "correlated through BSC(0.1): C = {:.6}, attainable = {}",
        noisy.capacity,
        noisy.attainable()
    );

    let model = SourceModel::Iid(correlated.clone());
    for p in [0.85, 0.87] {
        let check = achievability_check(&model, None, p, &EstimatorConfig::default(), &WorkCaps::default())?;
        let b = check.binding();
        println!("p = {p}: feasible = {}, binding rows {:?} margin {:+.5}", check.feasible, b.rows, b.margin);
    }
    Ok(())
}
