from typing import List

import pandas as pd

from src.fogsim import ConditionReport


def get_condition_recommendations(report: ConditionReport) -> List[str]:
    """Generate acquisition advice from a condition report"""
    recommendations = []

    # Condition (i): photon-number fluctuation between events
    if report.condition_i_holds:
        if report.mean_frame_deviation > 10 * report.epsilon:
            recommendations.append("✅ **Fluctuation present**: frame intensities vary clearly between events")
        else:
            recommendations.append("💡 **Weak fluctuation**: condition (i) holds only just above the threshold")
            recommendations.append("⏱️ A longer integration time per event increases the photon-number fluctuation")
    else:
        recommendations.append("⚠️ **No fluctuation**: per-frame mean intensities are (nearly) identical")
        recommendations.append("🌫️ Correlation reconstruction needs a time-variant medium; a static scene gives no gain")
        recommendations.append("⏱️ Lengthen the integration time or record more events")

    # Condition (ii): interval versus coherence time
    if report.condition_ii_holds:
        recommendations.append("✅ **Interval long enough**: events are separated by more than the coherence time")
    else:
        recommendations.append(
            f"⚠️ **Interval too short**: Δτ = {report.interval_s:.6g} s does not exceed "
            f"τc = {report.coherence_time_s:.6g} s"
        )
        recommendations.append("🔁 Increase the time between events so the ambient light decorrelates")

    # Residual temporal correlation
    if abs(report.ambient_autocorr) > 0.3:
        recommendations.append(
            f"📉 **Correlated residuals**: lag-1 autocorrelation {report.ambient_autocorr:+.3f}; "
            "ambient light may still be coherent across events"
        )

    return recommendations


def get_sweep_recommendations(summary: pd.DataFrame) -> List[str]:
    """Generate advice from a sweep summary (median SSIM per algorithm and count)"""
    recommendations = []
    if summary.empty:
        return ["⚠️ **No results**: every sweep cell failed"]

    for algorithm, group in summary.groupby('algorithm'):
        ordered = group.sort_values('n_frames')
        medians = ordered['ssim_median'].tolist()
        if all(b >= a for a, b in zip(medians, medians[1:])):
            recommendations.append(f"📈 **{algorithm}**: median SSIM does not drop as measurements are added")
        else:
            recommendations.append(f"⚠️ **{algorithm}**: median SSIM drops somewhere along the sweep; add seeds")

    best = summary.sort_values('ssim_median', ascending=False).iloc[0]
    recommendations.append(
        f"🏆 **Best cell**: {best['algorithm']} with {int(best['n_frames'])} frames "
        f"(median SSIM {best['ssim_median']:.4f})"
    )
    return recommendations
