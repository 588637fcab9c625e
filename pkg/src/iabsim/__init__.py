"""Monte-Carlo coverage simulation and constrained placement optimization
for two-hop wireless networks with in-band access and backhaul."""

__version__ = "0.1.0"
