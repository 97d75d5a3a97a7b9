"""Drone flight-log anomaly detection: phase-aware mined range rules fused
with a majority-voting ensemble of five unsupervised detectors, plus a
seeded fault-injecting mission simulator and an evaluation harness."""

__version__ = "0.1.0"
