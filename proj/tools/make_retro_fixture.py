#!/usr/bin/env python3
"""Writes the synthetic retrospective fixture (bg.csv, insulin.csv, nutrition.csv).

23 tube-fed patients on IV insulin. Background BG follows a mean-reverting
random walk kept inside the mild bands; adverse readings (19 below 70 mg/dL,
107 above 250 mg/dL) are placed between the second and the last insulin
setting, each inside an insulin interval of a single kind. A few extra high
readings before the second setting exercise the event filter.

Usage: make_retro_fixture.py OUT_DIR
"""

import math
import random
import sys
from pathlib import Path

SEED = 2611
N_PATIENTS = 23
N_HYPO = 19
N_HYPER = 107


def allocate(rng, total, n, weights):
    counts = [0] * n
    for _ in range(total):
        counts[rng.choices(range(n), weights=weights)[0]] += 1
    return counts


def patient(rng, pid, n_hypo, n_hyper):
    n_events = n_hypo + n_hyper
    duration = 36.0 + 4.0 * n_events

    times = [0.0]
    while times[-1] < duration:
        times.append(round(times[-1] + rng.uniform(0.75, 1.5), 2))

    settings = [0.0]
    while settings[-1] < duration - 2.0:
        settings.append(round(settings[-1] + rng.uniform(1.5, 3.5), 2))
    rates = [round(rng.uniform(1.0, 6.0), 1) for _ in settings]

    # Intervals (settings[k], settings[k+1]] with k >= 1 and enough history before settings[k].
    eligible = [k for k in range(1, len(settings) - 1) if settings[k] >= 8.0]
    rng.shuffle(eligible)

    def slots(k):
        return [i for i, t in enumerate(times) if settings[k] < t <= settings[k + 1]]

    plan = {}
    need = {"hypo": n_hypo, "hyper": n_hyper}
    for k in eligible:
        free = slots(k)
        if not free:
            continue
        kind = "hypo" if need["hypo"] > 0 and (need["hyper"] == 0 or rng.random() < 0.5) else "hyper"
        if need[kind] == 0:
            continue
        take = min(need[kind], len(free), 3)
        plan[k] = (kind, free[:take])
        need[kind] -= take
        if need["hypo"] == 0 and need["hyper"] == 0:
            break
    if need["hypo"] or need["hyper"]:
        raise RuntimeError(f"patient {pid}: not enough room for events")

    bg = []
    g = rng.uniform(130.0, 180.0)
    for i, t in enumerate(times):
        dt = times[i] - times[i - 1] if i else 0.0
        g = 155.0 + (g - 155.0) * math.exp(-0.3 * dt) + rng.gauss(0.0, 18.0) * math.sqrt(max(dt, 0.0))
        g = min(max(g, 95.0), 235.0)
        bg.append(round(g))

    for k, (kind, idx) in plan.items():
        if kind == "hypo":
            rates[k] = round(rng.uniform(3.0, 8.0), 1)
            for i in idx:
                bg[i] = rng.randint(45, 68)
        else:
            rates[k] = round(rng.uniform(0.5, 3.0), 1)
            for i in idx:
                bg[i] = rng.randint(256, 360)

    # A high reading before the second setting is not an evaluable event.
    early = [i for i, t in enumerate(times) if 0.0 < t < settings[1]]
    if early and rng.random() < 0.4:
        bg[early[0]] = rng.randint(260, 300)

    nut_t = [0.0]
    while nut_t[-1] < duration - 4.0:
        nut_t.append(round(nut_t[-1] + rng.uniform(4.0, 10.0), 2))
    nut_r = [rng.choice([0.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0, 6.0]) for _ in nut_t]
    nut_r[0] = max(nut_r[0], 2.0)

    return times, bg, settings, rates, nut_t, nut_r


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else ".")
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(SEED)
    hypo = allocate(rng, N_HYPO, N_PATIENTS, [1.0 if i % 3 == 0 else 0.15 for i in range(N_PATIENTS)])
    hyper = allocate(rng, N_HYPER, N_PATIENTS, [1.0] * N_PATIENTS)
    for i in range(N_PATIENTS):
        if hypo[i] + hyper[i] == 0:
            j = max(range(N_PATIENTS), key=lambda m: hyper[m])
            hyper[j] -= 1
            hyper[i] += 1

    with open(out / "bg.csv", "w") as fb, open(out / "insulin.csv", "w") as fi, open(out / "nutrition.csv", "w") as fn:
        fb.write("patient_id,time_hr,bg_mgdl\n")
        fi.write("patient_id,time_hr,rate_u_per_hr\n")
        fn.write("patient_id,time_hr,rate_units_per_hr\n")
        for i in range(N_PATIENTS):
            pid = f"P{i + 1:02d}"
            times, bg, settings, rates, nut_t, nut_r = patient(rng, pid, hypo[i], hyper[i])
            for t, v in zip(times, bg):
                fb.write(f"{pid},{t:.2f},{v}\n")
            for t, r in zip(settings, rates):
                fi.write(f"{pid},{t:.2f},{r:.1f}\n")
            for t, r in zip(nut_t, nut_r):
                fn.write(f"{pid},{t:.2f},{r:.1f}\n")


if __name__ == "__main__":
    main()
