"""Multi-school bus routing and scheduling by school compatibility decomposition."""
from .compatibility import (EDT, SDT, CompatibilityGraph, PseudoTrip, build_pair_set, deadhead,
                            deadhead_to_school, is_compatible, is_school_compatible)
from .instance import (Instance, InstanceError, InstanceFormatError, Node, School, SolverConfig,
                       Stop, compute_mnt, generate_instance, leg_duration, load_instance,
                       save_instance)
from .routing import (CompatTarget, RoutingInfeasible, RoutingObjective, SchoolRoutingResult,
                      exact_enumerate, heuristic_solve, solve_school)
from .scda import (IntegratedLimits, SizeLimitExceeded, Solution, UTCState, run_algorithm1,
                   run_algorithm2, run_baseline, run_integrated_exact, run_method, update_utc,
                   verify_solution)
from .scheduling import (BusBlock, Schedule, brute_force_schedule, solve_schedule,
                         verify_schedule)
from .trips import (RoutingPlan, Trip, Violation, dropoff_time, optimal_stop_order,
                    pickup_time, trip_travel_time, validate_trip)

__version__ = "0.1.0"
