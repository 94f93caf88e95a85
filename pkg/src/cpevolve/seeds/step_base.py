import json
import sys

import numpy as np


def firework_step_redesign(v_k, g_k, fn, base_step):
    '''
    params:
    v_k: current placement (flat array, all x then all y)
    g_k: current gradient
    fn: evaluation tool for a solution, fn(x) -> objective value
    base_step: Barzilai-Borwein step size
    '''
    return base_step


def main():
    while True:
        line = sys.stdin.readline()
        if not line:
            break
        msg = json.loads(line)
        v_k = np.asarray(msg["v"], dtype=float)
        g_k = np.asarray(msg["g"], dtype=float)

        def fn(x):
            print(json.dumps({"eval": np.asarray(x, dtype=float).ravel().tolist()}), flush=True)
            return float(json.loads(sys.stdin.readline())["value"])

        step = firework_step_redesign(v_k, g_k, fn, msg["base_step"])
        print(json.dumps({"step": float(step)}), flush=True)


if __name__ == "__main__":
    main()
