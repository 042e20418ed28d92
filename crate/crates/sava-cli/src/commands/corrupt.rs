//! `sava corrupt`: inject one corruption kind into an existing dataset file.

use sava_core::dataset::{load_dataset, save_dataset};
use sava_core::{Error, Result};

use crate::cli::CorruptArgs;
use crate::util::{format_for, NoisePlan};

pub fn run(args: &CorruptArgs) -> Result<()> {
    let ds = load_dataset(&args.input, format_for(&args.input))?;
    let plan = NoisePlan {
        label_noise: args.label_noise,
        feature_noise: args.feature_noise,
        noise_sigma: args.noise_sigma,
    };
    // Feature noise on an arbitrary dataset has no synthesis scale to fall
    // back on, so the flag is required there.
    if args.feature_noise.is_some() && args.noise_sigma.is_none() {
        return Err(Error::InvalidConfig(
            "--feature-noise on an existing dataset needs an explicit --noise-sigma".into(),
        ));
    }
    let Some((noisy, mask)) = plan.apply(&ds, args.seed, 0.0)? else {
        return Err(Error::InvalidConfig(
            "nothing to do: give --label-noise or --feature-noise".into(),
        ));
    };
    save_dataset(&noisy, &args.out, format_for(&args.out))?;
    mask.save(&args.mask)?;
    println!(
        "corrupted {} of {} points -> {} (mask {})",
        mask.corrupted(),
        ds.n(),
        args.out.display(),
        args.mask.display()
    );
    Ok(())
}
