"""Regenerate the bundled scenario files in src/mrcstat/scenarios/."""

from __future__ import annotations

import json
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "mrcstat" / "scenarios"
WAVELENGTH = 1.0
COUNT = 32
RADIUS = 5.25


def ula(pattern=None, local_areas="shared"):
    return {"type": "ula", "count": COUNT, "spacing_m": 0.5 * WAVELENGTH, "axis": [1.0, 0.0, 0.0],
            "pattern": pattern or {"type": "isotropic"}, "local_areas": local_areas}


def half_circle(zeta):
    return {"type": "half_circle", "count": COUNT, "radius_m": RADIUS * WAVELENGTH,
            "pattern": {"type": "cos_power", "zeta": zeta}, "local_areas": "shared"}


def tap(K, azimuth, diffuse):
    t = {"S": 1.0, "K": K}
    if K:
        t["deterministic"] = {"azimuth_deg": azimuth, "polar_deg": 90.0}
    t["diffuse"] = diffuse
    return t


def von_mises(center, kappa=5.0):
    return {"type": "von_mises", "center_deg": center, "kappa": kappa}


def scenarios():
    out = {
        "verify_ula32_uncorrelated": {"array": ula(local_areas="per_element"), "taps": [tap(4.0, 70.0, {"type": "omni"})]},
        "verify_ula32_omni": {"array": ula(), "taps": [tap(4.0, 70.0, {"type": "omni"})]},
        "verify_ula32_vm_aligned": {"array": ula(), "taps": [tap(4.0, 70.0, von_mises(70.0))]},
        "verify_ula32_vm_squint": {"array": ula(), "taps": [tap(4.0, 70.0, von_mises(90.0))]},
    }
    for zeta in (2, 20):
        for theta in (30, 60):
            for K in (0, 4):
                broadside = {"type": "cos_power", "zeta": float(zeta), "boresight_deg": 90.0}
                t = [tap(float(K), float(theta), von_mises(float(theta)))]
                out[f"bs_ula_zeta{zeta}_theta{theta}_K{K}"] = {"array": ula(broadside), "taps": t}
                out[f"bs_halfcircle_zeta{zeta}_theta{theta}_K{K}"] = {"array": half_circle(float(zeta)), "taps": t}
    out["ld_comparison"] = {
        "array": ula({"type": "cos_power", "zeta": 2.0, "boresight_deg": 90.0}),
        "taps": [tap(4.0, 60.0, von_mises(60.0))],
    }
    return {name: {"wavelength_m": WAVELENGTH, **body, "seed": 0} for name, body in out.items()}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, doc in scenarios().items():
        (OUT / f"{name}.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
