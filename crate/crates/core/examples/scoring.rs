//! Log predictive scores, cumulative ranks, Kendall's tau between two
//! information sets, and relative measures.

use nalgebra::{DMatrix, DVector};
use rtvar::panel::StandardizationInfo;
use rtvar::score::{
    cumulate, joint_lpl, kendall_tau, marginal_lpl, rank_models, relative_series, rmse, Direction, RelativeKind,
};

fn main() -> rtvar::Result<()> {
    // two predictive draws for one variable, de-standardized with mean 2 and sd 0.5
    let lpl = marginal_lpl(2.3, &[(0.4, 1.0), (0.8, 0.7)], 2.0, 0.5)?;
    println!("marginal LPL: {lpl:.4}");

    let info = StandardizationInfo {
        mean: vec![0.0, 1.0],
        sd: vec![1.0, 2.0],
    };
    let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
    let joint = joint_lpl(&DVector::from_vec(vec![0.2, 1.5]), &[(DVector::zeros(2), cov)], &info)?;
    println!("joint LPL: {joint:.4}");

    // three models scored over four months under both information sets
    let realtime = [[-1.2, -1.5, -1.1, -1.3], [-1.0, -1.6, -1.4, -1.2], [-1.4, -1.2, -1.0, -1.5]];
    let pseudo = [[-1.0, -1.2, -1.0, -1.1], [-1.1, -1.3, -1.2, -1.0], [-1.2, -1.1, -0.9, -1.4]];
    let cum_rt: Vec<Vec<f64>> = realtime.iter().map(|s| cumulate(s)).collect();
    let cum_ps: Vec<Vec<f64>> = pseudo.iter().map(|s| cumulate(s)).collect();
    for t in 0..4 {
        let r = rank_models(&cum_rt.iter().map(|s| s[t]).collect::<Vec<_>>(), Direction::Descending);
        let p = rank_models(&cum_ps.iter().map(|s| s[t]).collect::<Vec<_>>(), Direction::Descending);
        println!("month {t}: ranks real time {r:?} pseudo {p:?} tau {:?}", kendall_tau(&r, &p)?);
    }
    let rel = relative_series(&cum_rt[0], &cum_ps[0], RelativeKind::Difference)?;
    println!("model 0 cumulative LPS, real time minus pseudo: {rel:?}");
    println!("RMSE of errors [0.3, 0.4, 1.2]: {:.4}", rmse(&[0.3, 0.4, 1.2])?);
    Ok(())
}
