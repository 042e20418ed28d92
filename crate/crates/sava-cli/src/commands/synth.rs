//! `sava synth`: draw a mixture pair, optionally corrupt the training side.

use sava_core::dataset::{save_dataset, synth_gaussian_mixture_pair};
use sava_core::Result;

use crate::cli::SynthArgs;
use crate::util::NoisePlan;

pub fn run(args: &SynthArgs) -> Result<()> {
    let (clean, val) = synth_gaussian_mixture_pair(
        args.n,
        args.n_val,
        args.d,
        args.v,
        args.sep,
        args.seed,
    )?;

    let plan = NoisePlan {
        label_noise: args.label_noise,
        feature_noise: args.feature_noise,
        noise_sigma: args.noise_sigma,
    };
    let corrupt_seed = args.corrupt_seed.unwrap_or(args.seed.wrapping_add(1));
    let corrupted = plan.apply(&clean, corrupt_seed, args.sep)?;

    std::fs::create_dir_all(&args.out_dir)?;
    let ext = args.format.extension();
    let train_path = args.out_dir.join(format!("train.{ext}"));
    let val_path = args.out_dir.join(format!("val.{ext}"));

    let train = match &corrupted {
        Some((noisy, _)) => noisy,
        None => &clean,
    };
    save_dataset(train, &train_path, args.format.to_core())?;
    save_dataset(&val, &val_path, args.format.to_core())?;
    println!(
        "train: {} (n={}, d={}, v={}, hash {})",
        train_path.display(),
        train.n(),
        train.d(),
        train.v(),
        train.content_hash()
    );
    println!(
        "val:   {} (n={}, hash {})",
        val_path.display(),
        val.n(),
        val.content_hash()
    );

    if let Some((_, mask)) = &corrupted {
        let mask_path = args.out_dir.join("mask.json");
        mask.save(&mask_path)?;
        println!(
            "mask:  {} ({} of {} points corrupted, kind {:?}, seed {})",
            mask_path.display(),
            mask.corrupted(),
            train.n(),
            mask.kind,
            mask.seed
        );
    }
    Ok(())
}
