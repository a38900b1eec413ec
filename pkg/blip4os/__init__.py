from blip4os.core import OrderStatisticPredictor
from blip4os.efficiency import (EfficiencyCurve, EfficiencyFunction,
                                EfficiencySpec, crossings, curve,
                                efficiency_at, find_delta_star, iem, recommend,
                                scale_efficiency)
from blip4os.estimation import (BlueResult, CensoredSample, blue, delta_hat,
                                scale_blue)
from blip4os.moments import (MomentSet, MomentSlice, ParentModel,
                             compute_moments, load_moments, save_moments,
                             slice_moments)
from blip4os.prediction import (LinearPredictor, MSPEMatrix, blip, blip_mspe,
                                blup, blup_mspe, combine, dominance_gap,
                                kaminsky_blip, kaminsky_predictor, mspe_matrix,
                                predict, scale_blip, scale_blup,
                                scale_blup_mspe)
from blip4os.simulation import SimPlan, SimReport, empirical_moments, simulate
