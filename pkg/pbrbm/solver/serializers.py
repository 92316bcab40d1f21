import math

from rest_framework import serializers

from .geometry import SimDomain
from .models import ExperimentRun
from .observables import TEST_FUNCTIONS
from .presets import PRESETS
from .sde import PENALIZATION, PROJECTION, REFLECTION

PIPELINES = ("simulate", "fd-solve", "iterate-q", "capacitance", "convergence", "truncation-study", "kde-planes")
PLANES = ("xOy", "yOz", "r-phi")
MAX_SEED = 2 ** 63 - 1


def positive(value):
    if value <= 0:
        raise serializers.ValidationError("Must be positive.")
    return value


# ---------------------- CONFIG SERIALIZERS ----------------------- #

class DomainSerializer(serializers.Serializer):
    """
    The truncated region Omega_L.

    ``kind`` is ``interval`` for the 1D half domain (inner, outer) and
    ``shell`` for R <= |x| <= L in two or three dimensions.
    """
    dimension = serializers.ChoiceField(choices=[1, 2, 3])
    kind = serializers.ChoiceField(choices=["interval", "shell"])
    inner = serializers.FloatField()
    outer = serializers.FloatField()

    def validate(self, attrs):
        try:
            SimDomain(attrs["dimension"], attrs["kind"], attrs["inner"], attrs["outer"])
        except ValueError as error:
            raise serializers.ValidationError(str(error))
        return attrs


class PhysicsSerializer(serializers.Serializer):
    """
    Physical and discretization parameters.

    Exactly one of ``N_plus`` (direct simulation with a prescribed Q_plus) and
    ``rho_inf`` (far-field concentration, Q_plus found by iteration) selects
    the mode.
    """
    nu = serializers.FloatField(validators=[positive])
    Q_f = serializers.FloatField()
    Q_plus = serializers.FloatField(required=False, validators=[positive])
    N_plus = serializers.IntegerField(required=False, min_value=1)
    rho_inf = serializers.FloatField(required=False, validators=[positive])
    q = serializers.FloatField(required=False, validators=[positive])
    tau = serializers.FloatField(validators=[positive])
    T = serializers.FloatField(required=False, validators=[positive])
    n_steps = serializers.IntegerField(required=False, min_value=1)
    p = serializers.IntegerField(default=2, min_value=2)
    init = serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=2, required=False)
    x_c = serializers.ListField(child=serializers.FloatField(), min_length=1, max_length=3, required=False)

    def validate_init(self, value):
        if value[0] >= value[1]:
            raise serializers.ValidationError("Initial range must be increasing.")
        return value

    def validate(self, attrs):
        if ("N_plus" in attrs) == ("rho_inf" in attrs):
            raise serializers.ValidationError("Give exactly one of N_plus and rho_inf.")
        if "N_plus" in attrs and "Q_plus" not in attrs:
            raise serializers.ValidationError({"Q_plus": ["Required when N_plus is given."]})
        if "T" in attrs and "n_steps" in attrs:
            raise serializers.ValidationError("Give at most one of T and n_steps.")
        return attrs


class SchemeSerializer(serializers.Serializer):
    variant = serializers.ChoiceField(choices=[PROJECTION, REFLECTION, PENALIZATION], default=REFLECTION)
    lam = serializers.FloatField(default=1.0)

    def validate_lam(self, value):
        if not 0 < value <= 1:
            raise serializers.ValidationError("Penalization weight must lie in (0, 1].")
        return value


class IterationSerializer(serializers.Serializer):
    T_c = serializers.FloatField(validators=[positive])
    epsilon = serializers.FloatField(validators=[positive])
    max_iters = serializers.IntegerField(min_value=1)
    h = serializers.FloatField(validators=[positive])
    Q_plus0 = serializers.FloatField(default=1.0, validators=[positive])


class ConvergenceSerializer(serializers.Serializer):
    N_plus_grid = serializers.ListField(child=serializers.IntegerField(min_value=1), min_length=2)
    repetitions = serializers.IntegerField(min_value=1)
    test_functions = serializers.ListField(child=serializers.ChoiceField(choices=TEST_FUNCTIONS),
                                           default=list(TEST_FUNCTIONS))


class CapacitanceSerializer(serializers.Serializer):
    Q_f_grid = serializers.ListField(child=serializers.FloatField(), min_length=3)


class TruncationSerializer(serializers.Serializer):
    L_list = serializers.ListField(child=serializers.FloatField(validators=[positive]), min_length=2)
    L_ref = serializers.FloatField(validators=[positive])
    h = serializers.FloatField(default=0.01, validators=[positive])
    decay_sigmas = serializers.ListField(child=serializers.FloatField(), default=list)
    decay_outer = serializers.FloatField(required=False, validators=[positive])

    def validate(self, attrs):
        if max(attrs["L_list"]) > attrs["L_ref"]:
            raise serializers.ValidationError({"L_list": ["Every length must be at most L_ref."]})
        return attrs


class KdeSerializer(serializers.Serializer):
    planes = serializers.ListField(child=serializers.ChoiceField(choices=PLANES), default=list(PLANES))
    grid_points = serializers.IntegerField(default=81, min_value=5)
    r_max = serializers.FloatField(required=False, validators=[positive])
    bandwidth = serializers.FloatField(required=False, validators=[positive])


class ReferenceSerializer(serializers.Serializer):
    n_nodes = serializers.IntegerField(min_value=16)


class ExperimentConfigSerializer(serializers.Serializer):
    """
    A complete experiment configuration.

    Nested blocks report errors under their own key, e.g.
    ``{"params": {"tau": ["Must be positive."]}}``. Cross-block checks
    (initial range inside the domain, free-charge position, batch size)
    report under the block they concern.
    """
    preset = serializers.CharField(required=False)
    pipeline = serializers.ChoiceField(choices=PIPELINES, required=False)
    domain = DomainSerializer()
    params = PhysicsSerializer()
    scheme = SchemeSerializer(required=False)
    iteration = IterationSerializer(required=False)
    convergence = ConvergenceSerializer(required=False)
    capacitance = CapacitanceSerializer(required=False)
    truncation = TruncationSerializer(required=False)
    kde = KdeSerializer(required=False)
    reference = ReferenceSerializer(required=False)
    bins = serializers.IntegerField(required=False, min_value=1)
    frames = serializers.IntegerField(required=False, min_value=1)
    seed = serializers.IntegerField(default=1, min_value=0, max_value=MAX_SEED)
    repetitions = serializers.IntegerField(default=1, min_value=1)

    def validate_preset(self, value):
        if value not in PRESETS:
            raise serializers.ValidationError(f"Unknown preset. Known presets: {', '.join(sorted(PRESETS))}.")
        return value

    def validate(self, attrs):
        domain, params = attrs["domain"], attrs["params"]
        attrs.setdefault("scheme", {"variant": REFLECTION, "lam": 1.0})

        init = params.get("init")
        if init is not None and (init[0] < domain["inner"] or init[1] > domain["outer"]):
            raise serializers.ValidationError({"params": {"init": ["Initial range must lie inside the domain."]}})
        if "x_c" in params and len(params["x_c"]) != domain["dimension"]:
            raise serializers.ValidationError(
                {"params": {"x_c": [f"Needs {domain['dimension']} components."]}})
        if "x_c" in params and domain["kind"] == "shell" and math.hypot(*params["x_c"]) >= domain["inner"]:
            raise serializers.ValidationError(
                {"params": {"x_c": [f"Free charge must lie strictly inside the cell (|x_c| < {domain['inner']})."]}})
        if domain["dimension"] > 1 and params["p"] != 2:
            raise serializers.ValidationError({"params": {"p": ["Only p = 2 is supported for d >= 2."]}})
        iteration = attrs.get("iteration")
        if iteration is not None and iteration["h"] >= domain["outer"] - domain["inner"]:
            raise serializers.ValidationError({"iteration": {"h": ["Half ball must be thinner than the domain."]}})
        return attrs


# ---------------------- REGISTRY SERIALIZERS ----------------------- #

class ExperimentRunSerializer(serializers.ModelSerializer):
    class Meta:
        model = ExperimentRun
        fields = ('id', 'pipeline', 'preset', 'seed', 'manifest_hash', 'status', 'output_dir', 'message',
                  'created_time')
        read_only_fields = fields


class PresetSerializer(serializers.Serializer):
    id = serializers.CharField()
    pipeline = serializers.CharField()
    config = serializers.DictField()
