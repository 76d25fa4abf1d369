"""Convergence of angle distributions to the sine law (Knudsen's cosine law).

Whatever distribution a gas is injected with, repeated passages through the
serrated wall cells forget it: the angle distribution approaches
mu(A) = 1/2 * integral_A sin(theta) dtheta.  We demonstrate this three ways:

  * exact atomic evolution of a measure under the transition kernel,
  * a 30000-particle Monte Carlo ensemble (the classic experiment: 45 bins,
    one angle per bin midpoint, 200 collisions),
  * the running (Cesaro) average, which converges even faster.
"""

from knudsen_billiard import (
    AtomicMeasure,
    MapParams,
    ParticleEnsemble,
    atomize_density,
    binned_histogram,
    cesaro,
    distance_to_mu,
    ensemble_step,
    evolve,
    mu_bin_masses,
    two_bump_density,
    uniform_density,
)

params = MapParams(0.5)
BINS = 45

starts = {
    "uniform": atomize_density(uniform_density, bins=BINS),
    "two-bump": atomize_density(two_bump_density, bins=BINS),
    "atom at 0.2": AtomicMeasure.point(0.2),
}

print("exact evolution: binned total-variation distance to the sine law")
print(f"{'step':>6} | " + " | ".join(f"{name:>12}" for name in starts))
trajectories = {name: evolve(nu, 200, params) for name, nu in starts.items()}
for step in (0, 5, 10, 25, 50, 100, 200):
    cells = []
    for name in starts:
        tv, _ = distance_to_mu(binned_histogram(trajectories[name][step], BINS))
        cells.append(f"{tv:12.5f}")
    print(f"{step:>6} | " + " | ".join(cells))

print()
print("running average (weak law) vs snapshot (strong law), atom start:")
nus = trajectories["atom at 0.2"]
for n in (10, 50, 200):
    _, ks_snap = distance_to_mu(binned_histogram(nus[n], BINS))
    _, ks_avg = distance_to_mu(binned_histogram(cesaro(nus[1 : n + 1]), BINS))
    print(f"  n={n:>3}: snapshot KS={ks_snap:.5f}   cesaro KS={ks_avg:.5f}")

print()
print("30000-particle ensemble, uniform start, 200 collisions, seed 0:")
ens = ParticleEnsemble.from_measure(starts["uniform"], 30000, seed=0)
for _ in range(200):
    ens = ensemble_step(ens, params)
hist = binned_histogram(ens, BINS)
tv, ks = distance_to_mu(hist)
print(f"  final TV={tv:.5f}  KS={ks:.5f}")

print()
print("final ensemble histogram against the sine law (* = simulated, | = exact):")
mu = mu_bin_masses(BINS)
scale = 50 / mu.max()
for j in range(0, BINS, 3):
    bar = int(round(hist.masses[j] * scale))
    tick = int(round(mu[j] * scale))
    chars = ["*"] * bar
    if tick >= len(chars):
        chars += [" "] * (tick - len(chars)) + ["|"]
    else:
        chars[tick] = "|"
    print(f"  bin {j:>2} {''.join(chars)}")
