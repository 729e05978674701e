"""Information-transition model of quantum measurement: simulator and calculator"""

__version__ = "1.0.0"
__author__ = "Info Transition Team"
__description__ = "Finitely fine-grained quantum dynamics with resource-triggered information transitions"
