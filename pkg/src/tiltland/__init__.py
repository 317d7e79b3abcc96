"""Cooperative multirotor landing on a tilting platform via distributed MPC."""
