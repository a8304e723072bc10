"""Compare the two crack-filling engines on the same mask.

Runs the trimmed-mean filler and the anisotropic-diffusion filler over
an identical detector mask and reports restoration quality (SSIM, PSNR,
MAE vs the clean original) plus wall-clock time, echoing the published
method comparison.
"""

from pathlib import Path

from craquelure import (
    CrackSpec,
    detect,
    generate_triplet,
    mae,
    procedural_painting,
    psnr,
    save_png,
    ssim,
    time_fill,
)

OUT = Path(__file__).parent / "output" / "inpainting"


def main():
    OUT.mkdir(parents=True, exist_ok=True)

    target = (598, 375)
    painting = procedural_painting(seed=21, target_size=target, scale=3.6)
    triplet = generate_triplet(painting, CrackSpec(target_size=target, seed=2100))
    mask = detect(triplet.damaged)
    save_png(triplet.damaged, OUT / "damaged.png")
    print(f"filling {int(mask.sum())} masked pixels "
          f"({100 * mask.mean():.1f}% of the image)\n")

    baseline = 100 * ssim(triplet.damaged, triplet.clean)
    print(f"{'method':>8}  {'SSIM':>7}  {'PSNR dB':>8}  {'MAE':>6}  {'time s':>7}")
    print(f"{'damaged':>8}  {baseline:7.2f}  {psnr(triplet.damaged, triplet.clean):8.2f}  "
          f"{mae(triplet.damaged, triplet.clean):6.2f}  {'-':>7}")
    for method in ("mtm", "ad"):
        restored, seconds = time_fill(triplet.damaged, mask, method)
        save_png(restored, OUT / f"restored_{method}.png")
        print(f"{method:>8}  {100 * ssim(restored, triplet.clean):7.2f}  "
              f"{psnr(restored, triplet.clean):8.2f}  "
              f"{mae(restored, triplet.clean):6.2f}  {seconds:7.3f}")
    print(f"\nartifacts in {OUT}")


if __name__ == "__main__":
    main()
