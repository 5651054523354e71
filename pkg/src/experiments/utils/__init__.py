"""Helpers shared by experiments: log-log fits and report writing."""
