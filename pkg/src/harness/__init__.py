"""Experiment harness: configuration, calibration store, trial runner and reports."""
