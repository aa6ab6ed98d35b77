"""Regenerates cdf_223.csv: 223 synthetic configurations, one row each,
112 of which spend under 10% of their time uploading."""
import random

rng = random.Random(223)
apps = [f"app{i:02d}" for i in range(16)]
platforms = ["gpu-a", "gpu-b", "mic"]
rows = []
for i in range(223):
    low = i < 112
    r = rng.uniform(0.002, 0.09) if low else rng.uniform(0.11, 0.97)
    kex = rng.uniform(0.01, 2.0)
    d2h = kex * rng.uniform(0.0, 0.2)
    h2d = r * (kex + d2h) / (1.0 - r)
    rows.append((apps[i % 16], "serial", f"ds{i // 16:02d}", platforms[i % 3], h2d, kex, d2h))
rng.shuffle(rows)
with open("cdf_223.csv", "w") as f:
    f.write("app,variant,dataset,platform,run,h2d_s,kex_s,d2h_s\n")
    for a, v, d, p, h, k, t in rows:
        f.write(f"{a},{v},{d},{p},0,{h:.6f},{k:.6f},{t:.6f}\n")
