"""Asynchronous co-simulation of the two vehicles and their goal exchange."""

from .bus import BusConfig, GoalMessage, MessageBus, exchange_goals
from .controllers import PlatformController, PlatformControllerConfig, UavController, UavControllerConfig
from .landing import LandingStateMachine, Phase, TouchdownConfig, TouchdownEvent, detect_touchdown
from .trial import Scenario, TrialRecord, run_trial

__all__ = [
    "BusConfig", "GoalMessage", "LandingStateMachine", "MessageBus", "Phase", "PlatformController",
    "PlatformControllerConfig", "Scenario", "TouchdownConfig", "TouchdownEvent", "TrialRecord",
    "UavController", "UavControllerConfig", "detect_touchdown", "exchange_goals", "run_trial",
]
