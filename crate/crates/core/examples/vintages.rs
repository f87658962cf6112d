//! Build a synthetic vintage archive, read two releases back and compare the
//! real-time panel at one release with the pseudo panel cut from the final vintage.

use rtvar::harness::{generate_synthetic_vintages, SyntheticSpec};
use rtvar::panel::{build_panel, common_start, standardize};
use rtvar::vintage::{parse_vintage_with_release, truncate_final_vintage, Group};

fn main() -> rtvar::Result<()> {
    let dir = std::env::temp_dir().join("rtvar-example-vintages");
    let archive = generate_synthetic_vintages(&SyntheticSpec::default(), &dir)?;
    let manifest = &archive.manifest;
    let asof = archive.releases[archive.releases.len() / 2];

    let realtime = parse_vintage_with_release(&dir.join(format!("{asof}.csv")), manifest, asof)?;
    let final_path = dir.join(format!("{}.csv", archive.final_release));
    let final_vintage = parse_vintage_with_release(&final_path, manifest, archive.final_release)?;
    let pseudo = truncate_final_vintage(&final_vintage, asof, &manifest.lag_profile())?;

    let codes = manifest.codes_up_to(Group::Small);
    let start = common_start(&realtime, &codes)?;
    let rt = standardize(&build_panel(&realtime, &codes, start)?)?;
    let ps = standardize(&build_panel(&pseudo, &codes, start)?)?;
    println!("release {asof}: {} rows x {} series, ends {}", rt.nrows(), rt.ncols(), rt.end().expect("non-empty panel"));

    // revisions only touch the last year of each non-final release
    let last = rt.nrows() - 1;
    for (j, code) in codes.iter().enumerate() {
        let raw_rt = rt.values[(last, j)] * rt.std_info.sd[j] + rt.std_info.mean[j];
        let raw_ps = ps.values[(last, j)] * ps.std_info.sd[j] + ps.std_info.mean[j];
        println!("{code}: real time {raw_rt:8.4}  final {raw_ps:8.4}  revision {:8.4}", raw_ps - raw_rt);
    }
    Ok(())
}
