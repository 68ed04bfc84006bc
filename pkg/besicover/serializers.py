"""
Serializers for experiment configs and reports.
Handles validation of JSON inputs and builds the domain objects they describe.
"""

import logging
from fractions import Fraction

from rest_framework import serializers

from besicover.concentration import DiscreteMeasure, DyadicMeasure, circle_measure
from besicover.covering import BallFamilySpec, Carpet, ONE_SIDED_CUBE
from besicover.dynamics import Observable, build_action
from besicover.geometry import NormSpec
from besicover.maximal import WitnessPackage
from utils.error_handlers import BesicoverError
from utils.rationals import render, to_fraction

logger = logging.getLogger(__name__)


class RationalField(serializers.Field):
    """
    Exact rational: accepts ints, "p/q" and decimal strings; renders "p/q"
    (or "p" for integers).
    """
    default_error_messages = {
        'invalid': 'A rational number ("p/q", an integer or a decimal string) is required.',
    }

    def to_internal_value(self, data):
        if isinstance(data, float):
            # JSON floats are accepted only through their shortest decimal form.
            data = repr(data)
        try:
            return to_fraction(data)
        except BesicoverError:
            self.fail('invalid')

    def to_representation(self, value):
        return render(value)


class PointField(serializers.ListField):
    child = serializers.IntegerField()

    def to_internal_value(self, data):
        return tuple(super().to_internal_value(data))


class NormSpecSerializer(serializers.Serializer):
    """
    Serializer for norm specifications.
    {"kind": "p", "p": 1|2|"inf", "d": int}, {"kind": "wsup", "weights": [...]}
    or {"kind": "poly", "functionals": [[...], ...]}.
    """
    KIND_CHOICES = (('p', 'l^p'), ('wsup', 'weighted sup'), ('poly', 'polyhedral'))

    kind = serializers.ChoiceField(choices=KIND_CHOICES, default='p')
    p = serializers.JSONField(required=False)
    d = serializers.IntegerField(min_value=1, required=False)
    weights = serializers.ListField(child=RationalField(), required=False)
    functionals = serializers.ListField(child=serializers.ListField(child=RationalField()), required=False)

    def validate_p(self, value):
        if value in (1, 2):
            return value
        if value in ('inf', 'Infinity', 'infinity'):
            return 'inf'
        raise serializers.ValidationError("p must be 1, 2 or \"inf\".")

    def validate(self, attrs):
        kind = attrs.get('kind', 'p')
        if kind == 'p' and ('p' not in attrs or 'd' not in attrs):
            raise serializers.ValidationError({"p": "An l^p norm needs both p and d."})
        if kind == 'wsup' and not attrs.get('weights'):
            raise serializers.ValidationError({"weights": "A weighted sup norm needs weights."})
        if kind == 'poly' and not attrs.get('functionals'):
            raise serializers.ValidationError({"functionals": "A polyhedral norm needs functionals."})
        try:
            attrs['norm'] = self._build(attrs)
        except BesicoverError as e:
            raise serializers.ValidationError({"norm": e.message})
        return attrs

    @staticmethod
    def _build(attrs):
        kind = attrs.get('kind', 'p')
        if kind == 'p':
            return NormSpec('p', attrs['d'], p=attrs['p'])
        if kind == 'wsup':
            return NormSpec.weighted_sup(attrs['weights'])
        return NormSpec.polyhedral(attrs['functionals'])

    def create(self, validated_data):
        return validated_data['norm']


class FamilySerializer(serializers.Serializer):
    """Either {"kind": "one_sided_cube", "d": int} or {"kind": "norm", "norm": {...}}."""
    kind = serializers.ChoiceField(choices=(('norm', 'norm balls'), (ONE_SIDED_CUBE, 'one-sided cubes')))
    d = serializers.IntegerField(min_value=1, required=False)
    norm = NormSpecSerializer(required=False)

    def validate(self, attrs):
        if attrs['kind'] == 'norm':
            if 'norm' not in attrs:
                raise serializers.ValidationError({"norm": "A norm-ball family needs a norm."})
            attrs['family'] = BallFamilySpec.norm_balls(attrs['norm']['norm'])
        else:
            attrs['family'] = BallFamilySpec.one_sided_cubes(attrs.get('d', 2))
        return attrs

    def create(self, validated_data):
        return validated_data['family']

    def to_representation(self, family):
        if family.kind == ONE_SIDED_CUBE:
            return {'kind': ONE_SIDED_CUBE, 'd': family.d}
        return {'kind': 'norm', 'norm': family.norm.to_dict()}


class BallSerializer(serializers.Serializer):
    center = PointField()
    radius = RationalField()

    def validate_radius(self, value):
        if value < 0:
            raise serializers.ValidationError("Ball radii must be nonnegative.")
        return value


class CarpetSerializer(serializers.Serializer):
    """
    Serializer for carpets: {"family": {...}, "balls": [{"center": [...], "radius": "p/q"}, ...]}.
    The balls render as a bare array in carpet order.
    """
    family = FamilySerializer()
    balls = BallSerializer(many=True, allow_empty=False)

    def validate(self, attrs):
        family = attrs['family']['family']
        try:
            attrs['carpet'] = Carpet(tuple(family.ball(b['center'], b['radius']) for b in attrs['balls']))
        except BesicoverError as e:
            raise serializers.ValidationError({"balls": e.message})
        return attrs

    def create(self, validated_data):
        return validated_data['carpet']

    def to_representation(self, carpet):
        first = carpet.balls[0]
        if first.family_key == ONE_SIDED_CUBE:
            family = BallFamilySpec.one_sided_cubes(first.d)
        else:
            family = BallFamilySpec.norm_balls(first.norm)
        return {
            'family': FamilySerializer().to_representation(family),
            'balls': [{'center': list(b.center), 'radius': render(b.radius)} for b in carpet.balls],
        }


class AtomSerializer(serializers.Serializer):
    point = PointField()
    mass = RationalField()

    def validate_mass(self, value):
        if value <= 0:
            raise serializers.ValidationError("Atom masses must be positive.")
        return value


class MeasureSerializer(serializers.Serializer):
    """
    Serializer for measures: a list of atoms, or a dyadic grid measure
    {"kind": "dyadic", "m": int, "d": int} / {"kind": "circle", "m": int, "radius": "p/q"}.
    """
    KIND_CHOICES = (('atoms', 'atoms'), ('dyadic', 'dyadic grid'), ('circle', 'discretised circle'))

    kind = serializers.ChoiceField(choices=KIND_CHOICES, default='atoms')
    atoms = AtomSerializer(many=True, required=False)
    m = serializers.IntegerField(min_value=0, max_value=12, required=False)
    d = serializers.IntegerField(min_value=1, required=False)
    radius = RationalField(required=False)

    def to_internal_value(self, data):
        # A bare JSON array is a list of atoms.
        if isinstance(data, list):
            data = {'kind': 'atoms', 'atoms': data}
        return super().to_internal_value(data)

    def validate(self, attrs):
        kind = attrs.get('kind', 'atoms')
        if kind == 'atoms' and not attrs.get('atoms'):
            raise serializers.ValidationError({"atoms": "An atomic measure needs at least one atom."})
        if kind in ('dyadic', 'circle') and 'm' not in attrs:
            raise serializers.ValidationError({"m": "A dyadic measure needs the grid exponent m."})
        if kind == 'circle' and 'radius' not in attrs:
            raise serializers.ValidationError({"radius": "A circle measure needs a radius."})
        return attrs

    def create(self, validated_data):
        kind = validated_data.get('kind', 'atoms')
        if kind == 'dyadic':
            return DyadicMeasure(validated_data['m'], validated_data.get('d', 2))
        if kind == 'circle':
            return circle_measure(validated_data['m'], validated_data['radius'])
        masses = {}
        for atom in validated_data['atoms']:
            masses[atom['point']] = masses.get(atom['point'], Fraction(0)) + atom['mass']
        return DiscreteMeasure(masses)


class ActionSerializer(serializers.Serializer):
    """
    {"model": "counting"|"weighted"|"odometer", "d": int, "lambda": "p/q",
     "biases": [...], "N": int}
    """
    MODEL_CHOICES = (('counting', 'counting translation'), ('weighted', 'weighted translation'),
                     ('odometer', 'cyclic odometer'))

    model = serializers.ChoiceField(choices=MODEL_CHOICES)
    d = serializers.IntegerField(min_value=1)
    reverse = serializers.BooleanField(default=False)
    biases = serializers.ListField(child=RationalField(), required=False)
    N = serializers.IntegerField(min_value=1, max_value=30, required=False)

    def get_fields(self):
        fields = super().get_fields()
        # "lambda" is a keyword, so the field is declared here.
        fields['lambda'] = RationalField(required=False)
        return fields

    def validate(self, attrs):
        model = attrs['model']
        if model == 'weighted' and 'lambda' not in attrs:
            raise serializers.ValidationError({"lambda": "Weighted translation needs lambda."})
        if model == 'odometer' and ('N' not in attrs or 'biases' not in attrs):
            raise serializers.ValidationError({"N": "The odometer needs N and biases."})
        try:
            attrs['action'] = build_action(attrs)
        except BesicoverError as e:
            raise serializers.ValidationError({"model": e.message})
        return attrs

    def create(self, validated_data):
        return validated_data['action']


class ObservableSerializer(serializers.Serializer):
    """{"values": [{"point": [...], "value": "p/q"}, ...], "default": "p/q"}"""
    values = serializers.ListField(child=serializers.DictField(), default=list)
    default = RationalField(default=Fraction(0))

    def validate_values(self, value):
        cleaned = {}
        for item in value:
            if 'point' not in item or 'value' not in item:
                raise serializers.ValidationError("Every entry needs a point and a value.")
            point = PointField().run_validation(item['point'])
            cleaned[point] = RationalField().run_validation(item['value'])
        return cleaned

    def create(self, validated_data):
        return Observable(validated_data['values'], validated_data['default'])


class RadiusSerializer(serializers.Serializer):
    point = PointField()
    n = serializers.IntegerField(min_value=0)


class WitnessPackageSerializer(serializers.Serializer):
    """Serializer for witness packages (input and report rendering)."""
    U = serializers.ListField(child=PointField(), min_length=1)
    V = serializers.ListField(child=PointField(), min_length=1)
    t = RationalField()
    radii = RadiusSerializer(many=True)
    family = FamilySerializer()

    def validate(self, attrs):
        radii = {item['point']: item['n'] for item in attrs['radii']}
        try:
            attrs['package'] = WitnessPackage(attrs['U'], attrs['V'], attrs['t'], radii, attrs['family']['family'])
        except BesicoverError as e:
            raise serializers.ValidationError({"package": e.message})
        return attrs

    def create(self, validated_data):
        return validated_data['package']

    def to_representation(self, package):
        return {
            'U': [list(g) for g in package.U],
            'V': [list(g) for g in package.V],
            't': render(package.t),
            'radii': [{'point': list(g), 'n': n} for g, n in sorted(package.radii.items())],
            'family': FamilySerializer().to_representation(package.family),
        }


class CoverConfigSerializer(serializers.Serializer):
    MODE_CHOICES = (('symmetric', 'norm balls'), ('one_sided', 'one-sided cubes'))

    norms = NormSpecSerializer(many=True, required=False)
    trials = serializers.IntegerField(min_value=1)
    carpet_size = serializers.IntegerField(min_value=1, default=20)
    window = serializers.IntegerField(min_value=1, default=20)
    radius_min = serializers.IntegerField(min_value=0, default=1)
    radius_max = serializers.IntegerField(min_value=0, default=8)
    mode = serializers.ChoiceField(choices=MODE_CHOICES, default='symmetric')
    windows = serializers.ListField(child=serializers.IntegerField(min_value=1), required=False)
    d = serializers.IntegerField(min_value=1, default=2)

    def validate(self, attrs):
        if attrs['radius_min'] > attrs['radius_max']:
            raise serializers.ValidationError({"radius_min": "radius_min exceeds radius_max."})
        if attrs['mode'] == 'symmetric' and not attrs.get('norms'):
            raise serializers.ValidationError({"norms": "Symmetric calibration needs at least one norm."})
        if attrs['mode'] == 'one_sided' and not attrs.get('windows'):
            attrs['windows'] = [attrs['window']]
        return attrs


class ConcentrationConfigSerializer(serializers.Serializer):
    MODE_CHOICES = (('scan', 'boundary ratio scan'), ('thick_center', 'thick-center mass curve'))

    mode = serializers.ChoiceField(choices=MODE_CHOICES)
    measure = MeasureSerializer()
    norm = NormSpecSerializer()
    radii = serializers.ListField(child=RationalField(), required=False)
    samples = serializers.IntegerField(min_value=1, default=100)
    epsilon = RationalField()
    heights = serializers.IntegerField(min_value=0, max_value=4, default=3)
    R0 = RationalField(default=Fraction(2))
    centers = serializers.ListField(child=PointField(), required=False)

    def validate(self, attrs):
        if attrs['mode'] == 'scan' and not attrs.get('radii'):
            raise serializers.ValidationError({"radii": "A scan needs a radius schedule."})
        if attrs['mode'] == 'thick_center' and attrs['measure'].get('kind', 'atoms') != 'atoms':
            raise serializers.ValidationError({"measure": "Thick-center curves need an atomic measure."})
        return attrs


class RatioConfigSerializer(serializers.Serializer):
    action = ActionSerializer()
    f = ObservableSerializer()
    g = ObservableSerializer(required=False)
    h = ObservableSerializer(required=False)
    norm = NormSpecSerializer()
    n_max = serializers.IntegerField(min_value=0)
    n_min = serializers.IntegerField(min_value=0, default=0)
    omega = serializers.ListField(child=PointField(), min_length=1)
    t = serializers.IntegerField(min_value=1, default=1)
    v = PointField(required=False)


class StaircaseSweepSerializer(serializers.Serializer):
    K_values = serializers.ListField(child=serializers.IntegerField(min_value=1), min_length=1)
    M = RationalField(default=Fraction(1))


class SymmetricTrialsSerializer(serializers.Serializer):
    trials = serializers.IntegerField(min_value=1)
    C = RationalField()
    epsilon = RationalField()
    n_max = serializers.IntegerField(min_value=0, default=16)
    window = serializers.IntegerField(min_value=1, default=8)
    support_size = serializers.IntegerField(min_value=1, default=4)
    norm = NormSpecSerializer(required=False)


class MaximalConfigSerializer(serializers.Serializer):
    staircase = StaircaseSweepSerializer(required=False)
    symmetric = SymmetricTrialsSerializer(required=False)
    packages = WitnessPackageSerializer(many=True, required=False)
    M = RationalField(default=Fraction(1))


def build_object(serializer_cls, data):
    """Validate ``data`` and return the domain object built by ``create``."""
    serializer = serializer_cls(data=data)
    serializer.is_valid(raise_exception=True)
    return serializer.save()
