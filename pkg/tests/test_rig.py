"""Multi-eye fixation kinematics and gaze aggregation."""

import numpy as np
import pytest

from gazekit import (
    AvatarRig,
    EyeModel,
    HeadPose,
    fixate,
    fixate_clamped,
    fixation_from_vector,
    recognized_gaze,
    ring_rig,
    two_eye_rig,
)
from gazekit.errors import (
    DegenerateAggregate,
    RotationLimitExceeded,
    TargetAtEyeCenter,
)
from gazekit.rig import rig_from_dict, rig_to_dict
from gazekit.rotation import quat_from_axis_angle, quat_rotate

from conftest import point_line_distance


def single_eye_rig(**kwargs):
    return AvatarRig(eyes=(EyeModel(center=(0, 0, 0), rest_forward=(0, 0, 1),
                                    **kwargs),))


class TestFixate:
    def test_aligned_target_gives_identity(self):
        rig = single_eye_rig()
        [rot] = fixate(rig, [0, 0, 500])
        np.testing.assert_allclose(rot.quaternion, [1, 0, 0, 0], atol=1e-12)
        np.testing.assert_allclose(rot.direction, [0, 0, 1], atol=1e-12)

    def test_two_eye_vergence_is_mirror_symmetric(self):
        # eyes at +-32 mm each yaw inward by atan(32/500) toward the midline
        rig = two_eye_rig(ipd_mm=64.0)
        rotations = fixate(rig, [0, 0, 500])
        expected_yaw = np.arctan2(32.0, 500.0)
        left, right = rotations
        assert np.arctan2(left.direction[0], left.direction[2]) == pytest.approx(
            expected_yaw, abs=1e-12)
        assert np.arctan2(right.direction[0], right.direction[2]) == pytest.approx(
            -expected_yaw, abs=1e-12)
        np.testing.assert_allclose(left.direction[1], 0.0, atol=1e-15)

    def test_six_eye_ring_converges(self):
        rig = ring_rig(6, radius_mm=40.0)
        target = np.array([0.0, 0.0, 800.0])
        rotations = fixate(rig, target)
        centers = rig.eye_centers_world()
        for center, rot in zip(centers, rotations):
            assert point_line_distance(target, center, rot.direction) < 1e-9

    def test_randomized_rigs_converge(self):
        rng = np.random.default_rng(40)
        for n_eyes in (1, 2, 3, 6, 12):
            for _ in range(20):
                eyes = tuple(
                    EyeModel(center=rng.uniform(-50, 50, 3),
                             rest_forward=(0, 0, 1),
                             yaw_limit=np.pi / 2, pitch_limit=np.pi / 2)
                    for _ in range(n_eyes)
                )
                rig = AvatarRig(eyes=eyes)
                target = np.array([rng.uniform(-300, 300), rng.uniform(-300, 300),
                                   rng.uniform(400, 3000)])
                rotations = fixate(rig, target)
                for center, rot in zip(rig.eye_centers_world(), rotations):
                    assert point_line_distance(target, center, rot.direction) < 1e-9

    def test_torsion_is_zero(self):
        rig = two_eye_rig()
        for rot in fixate(rig, [100, -50, 700]):
            assert rot.torsion == 0.0

    def test_target_at_eye_center_rejected(self):
        rig = single_eye_rig()
        with pytest.raises(TargetAtEyeCenter):
            fixate(rig, [0, 0, 0])

    def test_head_pose_moves_the_eyes(self):
        # rotate the rig 90 degrees about y: rest forward +z becomes +x
        head = HeadPose(quaternion=quat_from_axis_angle([0, 1, 0], np.pi / 2),
                        translation=np.array([100.0, 0.0, 0.0]))
        rig = AvatarRig(eyes=(EyeModel(center=(0, 0, 0), rest_forward=(0, 0, 1)),),
                        head_pose=head)
        [rot] = fixate(rig, [600.0, 0.0, 0.0])
        np.testing.assert_allclose(rot.direction, [1, 0, 0], atol=1e-12)
        np.testing.assert_allclose(rot.quaternion, [1, 0, 0, 0], atol=1e-12)


class TestRotationLimits:
    def test_over_limit_raises_with_eye_index(self):
        rig = two_eye_rig(yaw_limit=np.deg2rad(10.0))
        with pytest.raises(RotationLimitExceeded) as excinfo:
            fixate(rig, [1000.0, 0.0, 300.0])
        assert excinfo.value.eye_index == 0

    def test_clamped_mode_saturates_and_reports(self):
        rig = two_eye_rig(yaw_limit=np.deg2rad(10.0), pitch_limit=np.deg2rad(35.0))
        rotations, violations = fixate_clamped(rig, [1000.0, 0.0, 300.0])
        assert violations and all(v.axis == "yaw" for v in violations)
        for rot, eye in zip(rotations, rig.eyes):
            yaw = np.arctan2(rot.direction[0], rot.direction[2])
            assert abs(yaw) <= eye.yaw_limit + 1e-12

    def test_clamped_mode_empty_report_when_within_limits(self):
        rig = two_eye_rig()
        rotations, violations = fixate_clamped(rig, [0.0, 0.0, 500.0])
        assert violations == []
        unclamped = fixate(rig, [0.0, 0.0, 500.0])
        for a, b in zip(rotations, unclamped):
            np.testing.assert_allclose(a.quaternion, b.quaternion, atol=1e-15)

    def test_limit_validation(self):
        with pytest.raises(ValueError):
            EyeModel(center=(0, 0, 0), rest_forward=(0, 0, 1), yaw_limit=0.0)
        with pytest.raises(ValueError):
            EyeModel(center=(0, 0, 0), rest_forward=(0, 0, 1),
                     pitch_limit=np.pi)


class TestRecognizedGaze:
    def test_common_direction_is_preserved(self):
        # distant target: all eye directions essentially equal
        rig = ring_rig(6, radius_mm=10.0)
        rotations = fixate(rig, [0, 0, 1e9])
        gaze = recognized_gaze(rig, rotations)
        np.testing.assert_allclose(gaze, [0, 0, 1], atol=1e-7)

    def test_weight_masking_selects_single_eye(self):
        eyes = (EyeModel(center=(-32, 0, 0), rest_forward=(0, 0, 1)),
                EyeModel(center=(32, 0, 0), rest_forward=(0, 0, 1)))
        rig = AvatarRig(eyes=eyes, weights=[1.0, 0.0])
        rotations = fixate(rig, [0, 0, 500])
        gaze = recognized_gaze(rig, rotations)
        np.testing.assert_allclose(gaze, rotations[0].direction, atol=1e-15)

    def test_symmetric_yaws_average_to_straight_ahead(self):
        # hand vector sum: (sin45+sin(-45), 0, cos45+cos45) ~ (0, 0, sqrt2)
        rig = two_eye_rig()
        q_left = quat_from_axis_angle([0, 1, 0], np.deg2rad(45.0))
        q_right = quat_from_axis_angle([0, 1, 0], -np.deg2rad(45.0))
        from gazekit.rig import EyeRotation

        rotations = [
            EyeRotation(quaternion=q_left, direction=quat_rotate(q_left, [0, 0, 1])),
            EyeRotation(quaternion=q_right, direction=quat_rotate(q_right, [0, 0, 1])),
        ]
        gaze = recognized_gaze(rig, rotations)
        np.testing.assert_allclose(gaze, [0, 0, 1], atol=1e-12)

    def test_antipodal_cancellation_rejected(self):
        from gazekit.rig import EyeRotation

        eyes = (EyeModel(center=(0, 0, -10), rest_forward=(0, 0, 1)),
                EyeModel(center=(0, 0, 10), rest_forward=(0, 0, -1)))
        rig = AvatarRig(eyes=eyes)
        rotations = [
            EyeRotation(quaternion=[1, 0, 0, 0], direction=np.array([0.0, 0, 1])),
            EyeRotation(quaternion=[1, 0, 0, 0], direction=np.array([0.0, 0, -1])),
        ]
        with pytest.raises(DegenerateAggregate):
            recognized_gaze(rig, rotations)

    def test_invariant_under_weights_when_directions_equal(self):
        rng = np.random.default_rng(41)
        rig_eyes = tuple(EyeModel(center=c, rest_forward=(0, 0, 1))
                         for c in rng.uniform(-20, 20, (4, 3)))
        for _ in range(10):
            w = rng.uniform(0.1, 1.0, 4)
            rig = AvatarRig(eyes=rig_eyes, weights=w)
            rotations = fixate(rig, [0, 0, 1e8])
            gaze = recognized_gaze(rig, rotations)
            np.testing.assert_allclose(gaze, [0, 0, 1], atol=1e-6)


class TestFixationFromVector:
    def test_target_construction(self):
        cmd = fixation_from_vector([0, 0, 1], 500.0, anchor=[0, 0, 0])
        np.testing.assert_allclose(cmd.target, [0, 0, 500])

    def test_scalar_multiply_case(self):
        cmd = fixation_from_vector([0.6, 0, 0.8], 1000.0, anchor=[0, 0, 0])
        np.testing.assert_allclose(cmd.target, [600, 0, 800], atol=1e-12)

    def test_round_trips_with_fixate(self):
        rng = np.random.default_rng(42)
        for _ in range(30):
            v = rng.normal(size=3)
            v[2] = abs(v[2]) + 0.5
            v /= np.linalg.norm(v)
            d = rng.uniform(100, 5000)
            anchor = rng.uniform(-100, 100, 3)
            cmd = fixation_from_vector(v, d, anchor)
            rig = AvatarRig(eyes=(EyeModel(center=anchor, rest_forward=(0, 0, 1),
                                           yaw_limit=np.pi / 2,
                                           pitch_limit=np.pi / 2),))
            [rot] = fixate(rig, cmd.target)
            np.testing.assert_allclose(rot.direction, v, atol=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            fixation_from_vector([0, 0, 1], 0.0)


class TestRigFiles:
    def test_dict_round_trip(self):
        rig = ring_rig(3, radius_mm=25.0)
        data = rig_to_dict(rig)
        rig2 = rig_from_dict(data)
        assert len(rig2) == 3
        np.testing.assert_allclose(rig2.weights, rig.weights)
        for a, b in zip(rig.eyes, rig2.eyes):
            np.testing.assert_allclose(a.center, b.center)
            np.testing.assert_allclose(a.rest_forward, b.rest_forward)

    def test_weights_are_normalized(self):
        eyes = (EyeModel(center=(0, 0, 0), rest_forward=(0, 0, 1)),
                EyeModel(center=(10, 0, 0), rest_forward=(0, 0, 1)))
        rig = AvatarRig(eyes=eyes, weights=[2.0, 6.0])
        np.testing.assert_allclose(rig.weights, [0.25, 0.75])

    def test_empty_rig_rejected(self):
        with pytest.raises(ValueError):
            AvatarRig(eyes=())

    def test_anchor_is_weighted_centroid(self):
        eyes = (EyeModel(center=(-32, 0, 0), rest_forward=(0, 0, 1)),
                EyeModel(center=(32, 0, 0), rest_forward=(0, 0, 1)))
        rig = AvatarRig(eyes=eyes)
        np.testing.assert_allclose(rig.gaze_anchor, [0, 0, 0], atol=1e-15)
        skewed = AvatarRig(eyes=eyes, weights=[3.0, 1.0])
        np.testing.assert_allclose(skewed.gaze_anchor, [-16, 0, 0], atol=1e-12)
