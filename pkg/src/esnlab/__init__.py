"""Echo state network simulation, training-free readouts and WTA-perceptron accuracy theory."""

__version__ = "0.1.0"
