"""Typicality and coordination over Glivenko-Cantelli function classes.

Empirical measures are compared with target laws through the seminorm
sup_f |P(f) - Q(f)| over a function class; the package computes these
suprema exactly for common geometric classes, decides typicality, solves the
associated rate problems and simulates random-codebook coordination schemes.
"""
from .classes import (AllFunctions, Balls, BoundedLipschitz, Composed, ConvexHull, FunctionClass, HalfLines,
                      Halfspaces, IncompatibleClassError, Intervals, Rectangles, VoronoiCells, eval_member,
                      vc_dimension)
from .coding_sim import (SimulationReport, build_piggyback_code, converse_check, simulate_coordination,
                         simulate_wz, time_mixed_joint)
from .concentration import covering_number, deviation_scaling, shatter_check, vc_probe
from .information import (JointPMF, conditional_mutual_information, entropy, information_density,
                          mutual_information)
from .measures import (DiscreteMeasure, ModelMeasure, SignedDifference, empirical_measure, point_mass, pmf,
                       uniform_box)
from .rates import (CoordinationProblem, MultiDistortionProblem, SideInfoProblem, coordination_rate,
                    multi_distortion_rate, rate_curve, wz_rate)
from .seminorm import brute_force_sup, seminorm, sup_result
from .typicality import (convergence_curve, design_quantizer, is_typical, project_typical, sample_iid)

__version__ = "0.1.0"
