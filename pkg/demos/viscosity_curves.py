"""Print the apparent viscosity of the eight armadillo materials over a strain-rate sweep."""
import numpy as np

from nnsph.scene import load_scene


def main():
    models = {k: m.viscosity for k, m in load_scene("armadillo_ramp").materials.items()}
    rates = np.logspace(-2, 2, 9)
    print("rate".rjust(10) + "".join(k.rjust(18) for k in models))
    for r in rates:
        print(f"{r:10.3g}" + "".join(f"{float(m(r)):18.5g}" for m in models.values()))


if __name__ == "__main__":
    main()
