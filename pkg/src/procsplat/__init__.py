"""procsplat: procedural-code-driven Gaussian splatting on the CPU.

Fit compact shared Gaussian assets from multi-view images under a layout
given by a small procedural building language, then reassemble and render
edited or generated layouts with the same differentiable splatting renderer.
"""

__version__ = "0.1.0"
