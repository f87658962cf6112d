//! Principal components from a wide panel, appended to a small VAR panel.

use rtvar::factors::{augment_panel, extract_pcs};
use rtvar::harness::{generate_synthetic_vintages, SyntheticSpec};
use rtvar::panel::{build_panel, common_start, standardize};
use rtvar::vintage::{parse_vintage_with_release, Group};

fn main() -> rtvar::Result<()> {
    let dir = std::env::temp_dir().join("rtvar-example-factors");
    let archive = generate_synthetic_vintages(&SyntheticSpec::default(), &dir)?;
    let release = archive.final_release;
    let vintage = parse_vintage_with_release(&dir.join(format!("{release}.csv")), &archive.manifest, release)?;

    let base = archive.manifest.codes_up_to(Group::Small);
    let wide = archive.manifest.codes_excluding(&base);
    let start = common_start(&vintage, &base)?;
    let wide_panel = standardize(&build_panel(&vintage, &wide, start)?)?;
    let factors = extract_pcs(&wide_panel, 5)?;

    let total: f64 = factors.explained_variance.iter().sum();
    for (k, ev) in factors.explained_variance.iter().take(5).enumerate() {
        println!("PC{}: {:5.1}% of variance", k + 1, 100.0 * ev / total);
    }
    let base_panel = standardize(&build_panel(&vintage, &base, start)?)?;
    let augmented = augment_panel(&base_panel, &factors)?;
    println!("augmented panel: {:?}", augmented.codes);
    Ok(())
}
