# Makes synth.py and oracles.py importable from the test modules.
