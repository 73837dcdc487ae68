"""Regenerate the classifier corpus fixtures. Run from the repo root."""
from __future__ import annotations

from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent / "fixtures" / "corpus"

MANIFEST_TEMPLATE = """<?xml version="1.0"?>
<package format="2">
  <name>{name}</name>
  <version>0.4.1</version>
  <description>{description}</description>
  <maintainer email="dev@example.org">maintainers</maintainer>
  <license>BSD</license>
</package>
"""

README_TEMPLATE = """# {name}

{body}

1. Requirements
The package has been tested on ROS Kinetic and Melodic.
It should work on other distributions as well.

$ sudo apt-get install ros-kinetic-{apt}

2. Installation
Clone this repository into your workspace and build it:

```
cd ~/catkin_ws/src
git clone https://example.org/{name}.git
catkin_make
```

    roslaunch {name} bringup.launch
"""

# name -> (label, manifest description, readme body)
REPOS = {
    "lidar_camera_calibration": (
        "preprocessing",
        "Calibrates the extrinsics between a 3D laser scanner and a monocular camera.",
        "This package finds the rigid transform between a laser scanner and a camera frame.",
    ),
    "depth_image_proc": (
        "preprocessing",
        "Nodelets for processing depth images, converting them to other representations.",
        "Contains nodelets to rectify depth streams and register them to color frames.",
    ),
    "slam_karto": (
        "localization",
        "Provides the pose of the robot against an incrementally built occupancy model.",
        "Graph-based scan matcher that keeps the robot localized while it moves.",
    ),
    "robot_pose_ekf": (
        "localization",
        "Estimates the 3D pose of the robot by fusing wheel odometry and inertial data.",
        "An extended Kalman filter over odometry, inertial and visual measurements.",
    ),
    "homer_mapping": (
        "mapping",
        "Creates an occupancy representation of the environment from laser data.",
        "Builds and serves the occupancy model used by the navigation stack.",
    ),
    "octomap_server": (
        "mapping",
        "Builds and distributes volumetric 3D occupancy models.",
        "Loads and serves 3D occupancy structures, compresses and visualizes them.",
    ),
    "rrt_exploration": (
        "mapping",
        "A ROS package that implements a multi-robot RRT-based map exploration "
        "algorithm. It also has the image-based frontier detection that uses image "
        "processing to extract frontier points",
        "It is a ROS package that implements a multi-robot map exploration algorithm "
        "for mobile robots. It is based on the Rapidly-Exploring Random Tree (RRT) "
        "algorithm. It uses occupancy girds as a map representation.\n"
        "The package has 5 different ROS nodes:\n"
        "(1) Global RRT frontier point detector node.\n"
        "(2) Local RRT frontier point detector node.",
    ),
    "jsk_recognition": (
        "recognition",
        "A stack for scene and object understanding from camera and laser input.",
        "Perception pipelines covering segmentation, feature extraction and matching.",
    ),
    "find_object_2d": (
        "recognition",
        "Finds learned items in camera images using feature matching.",
        "Simple GUI to teach the robot new items and publish their positions.",
    ),
    "asr_ftc_local_planner": (
        "path_planning",
        "Generates a collision-free local path towards the next waypoint.",
        "Implements the follow-the-carrot scheme for differential robots.",
    ),
    "navfn": (
        "path_planning",
        "A fast interpolated navigation function for producing global routes.",
        "Computes a global route on a costmap using Dijkstra expansion.",
    ),
    "behaviortree_planner": (
        "goal_planner",
        "High level task decomposition that parses a complex goal into simple actions.",
        "Describes robot missions as trees and dispatches leaf actions.",
    ),
    "smach_executive": (
        "goal_planner",
        "Hierarchical state machines to sequence long-running robot tasks.",
        "Composes tasks into state machines, with introspection support.",
    ),
    "path_follower": (
        "path_tracking",
        "Follows a planned path and outputs velocity towards the next pose.",
        "Keeps the robot on the given route and reports progress.",
    ),
    "pure_pursuit": (
        "path_tracking",
        "Classic lookahead-point steering that outputs velocity commands.",
        "Given a route, computes curvature towards a lookahead point.",
    ),
    "joy_teleop": (
        "teleoperation",
        "A generic set of teleoperation tools for any robot.",
        "Maps gamepad axes and buttons to velocity outputs and actions.",
    ),
    "teleop_twist_keyboard": (
        "teleoperation",
        "Generic keyboard control for twist-driven robots.",
        "Reads keys from the terminal and publishes motion commands.",
    ),
    "homer_tts": (
        "speech_generation",
        "Holds multiple ways to generate speech from text.",
        "Wraps several synthesis engines behind one interface.",
    ),
    "sound_play": (
        "speech_generation",
        "Translates text or prerecorded phrases into sounds on the robot.",
        "Single node that mixes phrase synthesis and wave playback.",
    ),
    "xbot_talker": (
        "speaker",
        "Drives the onboard loudspeaker of the xbot platform.",
        "Plays back synthesized phrases through the robot's amplifier.",
    ),
    "audio_play": (
        "speaker",
        "Outputs raw audio buffers to the default output device.",
        "Companion output stage for captured or synthesized audio streams.",
    ),
    "iot_bridge": (
        "switcher",
        "Turns home appliances on and off from robot software.",
        "Connects the robot to building automation so it can toggle devices.",
    ),
    "relay_board": (
        "switcher",
        "Controls a bank of relays to power external actuators.",
        "Exposes each channel so applications can energize attached devices.",
    ),
    "ackermann_controller": (
        "mobile",
        "Generates commands to steer a car-like vehicle.",
        "Converts velocity targets into steering angle and throttle.",
    ),
    "diff_drive_controller": (
        "mobile",
        "Controller for differential platforms, producing per-side velocities.",
        "Takes twist input and produces per-side rotation targets.",
    ),
    "agile_grasp": (
        "manipulator",
        "Detects stable contact points for two-finger hands.",
        "Finds candidate hand poses directly from 3D sensor data.",
    ),
    "gripper_action_controller": (
        "manipulator",
        "Action interface for opening and closing simple end effectors.",
        "Single-joint effector controller with stall detection.",
    ),
    "xsens_driver": (
        "sensors",
        "Receives inertial measurements from attached hardware.",
        "Publishes the device's filtered orientation and raw readings.",
    ),
    "velodyne_driver": (
        "sensors",
        "Reads packets from spinning laser hardware and publishes raw scans.",
        "Supports the full device family, with calibration loading.",
    ),
    "rqt_reconfigure": (
        "visualization",
        "A GUI plugin to edit node parameters at runtime.",
        "Lists every reconfigurable node and renders sliders for its parameters.",
    ),
    "rviz_imu_plugin": (
        "visualization",
        "Displays inertial readings inside the 3D scene.",
        "Renders orientation and acceleration next to the robot model.",
    ),
    "aws_ros1_common": (
        "support",
        "Packages that support running robot software against a third-party platform.",
        "Common utilities shared by the cloud service integrations.",
    ),
    "rosbridge_suite": (
        "support",
        "A JSON interface to the middleware, usable from the web.",
        "Lets browsers and remote processes talk to the robot over websockets.",
    ),
    "ros_pytest": (
        "extension",
        "Middleware extension to simplify writing integration checks.",
        "Launches fixtures next to your nodes and reports results.",
    ),
    "catkin_virtualenv": (
        "extension",
        "Bundles interpreter environments with middleware packages.",
        "Freezes requirements at build time for reproducible deployments.",
    ),
    "misc_ros_files": (
        "unknown",
        "Assorted resources shared by our lab robots.",
        "See the internal notes for more.",
    ),
    "lab_common_assets": (
        "unknown",
        "Shared odds and ends.",
        "Ask the people in room 204.",
    ),
}

# These two rely on the directory name, exercising the name.txt fallback.
NO_NAME_TXT = {"misc_ros_files", "navfn"}


def main() -> None:
    ROOT.mkdir(parents=True, exist_ok=True)
    labels = ["name,type"]
    for name, (label, desc, body) in sorted(REPOS.items()):
        repo = ROOT / name
        repo.mkdir(exist_ok=True)
        if name not in NO_NAME_TXT:
            (repo / "name.txt").write_text(name + "\n", encoding="utf-8")
        (repo / "package.xml").write_text(
            MANIFEST_TEMPLATE.format(name=name, description=desc), encoding="utf-8"
        )
        (repo / "README.md").write_text(
            README_TEMPLATE.format(name=name, body=body, apt=name.replace("_", "-")),
            encoding="utf-8",
        )
        labels.append(f"{name},{label}")
    (ROOT / "labels.csv").write_text("\n".join(labels) + "\n", encoding="utf-8")
    print(f"wrote {len(REPOS)} repos to {ROOT}")


if __name__ == "__main__":
    main()
