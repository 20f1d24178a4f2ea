"""Optimal excitation-input design for nonlinear state-space models over a
finite input alphabet, using prime cycles of memory graphs and particle
estimates of the Fisher information."""

from .design import Criterion, DesignResult, run_mc_design, solve_design
from .graph import (Alphabet, BasisInput, Cycle, StationaryGraph, StationaryPmf, basis_inputs,
                    basis_signal, build_graph, elementary_cycles, extreme_pmf, mix_pmfs,
                    prime_cycles, simple_cycles)
from .infomat import estimate_fim, fim_for_basis, mix_fim
from .kalman import lgss_exact_score
from .model import (GopaluniModel, LinearGaussianModel, ProposalSpec, StateSpaceModel, Trajectory,
                    builtin_lgss, builtin_nonlinear, get_model, simulate)
from .pipeline import ExperimentConfig, run_baseline, run_pipeline
from .sampler import ChainSpec, build_chain, sample_input
from .smc import ParticleSystem, SmootherConfig, estimate_score, fl_ancestors, run_apf

__version__ = "0.1.0"
